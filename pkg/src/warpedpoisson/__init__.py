"""Green potentials and spectral diagnostics on rotationally symmetric manifolds."""

__version__ = "0.1.0"
