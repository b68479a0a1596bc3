"""Bottom of the spectrum of the Laplacian on radial domains.

Radial functions carry the lowest energy on rotationally symmetric domains,
so the problem reduces to the weighted Sturm-Liouville quotient

    int v'^2 phi^{n-1} dr / int v^2 phi^{n-1} dr.

It is discretized with second-order finite differences (midpoint weights in
the stiffness, nodal weights in the lumped mass) and symmetrized in log
space, which keeps warps like ``exp(r^2)`` finite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BudgetExceededError, ConsistencyError, DomainError, PreconditionError
from .geometry import ModelManifold
from .numerics import gauss_legendre, integrate, smallest_eigenpair

DEFAULT_LADDER = (5.0, 10.0, 20.0, 40.0)
GAP_FLOOR = 1e-3


@dataclass(frozen=True)
class RadialDomain:
    """``exterior`` is ``(r1, inf)``, ``annulus`` is ``(r1, r2)``, ``whole`` is the manifold."""

    kind: str
    r1: float = 0.0
    r2: float | None = None

    def __post_init__(self):
        if self.kind == "exterior":
            if not self.r1 > 0:
                raise DomainError("exterior radius must be positive")
        elif self.kind == "annulus":
            if self.r2 is None or not 0 < self.r1 < self.r2:
                raise DomainError("annulus needs 0 < r1 < r2")
        elif self.kind != "whole":
            raise DomainError(f"unknown domain kind {self.kind!r}")

    @classmethod
    def exterior(cls, R: float) -> "RadialDomain":
        return cls("exterior", float(R))

    @classmethod
    def annulus(cls, r1: float, r2: float) -> "RadialDomain":
        return cls("annulus", float(r1), float(r2))

    @classmethod
    def whole(cls) -> "RadialDomain":
        return cls("whole")

    def describe(self) -> dict:
        return {"kind": self.kind, "r1": self.r1, "r2": self.r2}


@dataclass(frozen=True)
class SpectralSettings:
    h_fraction: float = 1e-3
    h_cap: float = 0.1
    ladder: tuple[float, ...] = DEFAULT_LADDER
    convergence_tol: float = 1e-4
    max_nodes: int = 2_000_000

    def refined(self, factor: int) -> "SpectralSettings":
        return SpectralSettings(self.h_fraction / factor, self.h_cap / factor, self.ladder,
                                self.convergence_tol, self.max_nodes * factor)


@dataclass(frozen=True)
class SpectralEstimate:
    value: float
    barta_lower: float
    rayleigh_upper: float
    outer_radius_used: float
    converged: bool
    ladder: tuple[tuple[float, float], ...] = field(default=())

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "barta_lower": self.barta_lower,
            "rayleigh_upper": self.rayleigh_upper,
            "outer_radius_used": self.outer_radius_used,
            "converged": self.converged,
            "ladder": [list(p) for p in self.ladder],
        }


@dataclass(frozen=True)
class _Solve:
    value: float
    rayleigh: float
    nodes: int


def _step(M: ModelManifold, a: float, b: float, s: SpectralSettings) -> float:
    lo = a if a > 0 else b / 100.0
    probe = np.linspace(lo, b, 2049)
    m_max = float(np.max(np.abs((M.n - 1) * M.warping.dlog(probe))))
    h = s.h_fraction * (b - a)
    if m_max > 0:
        h = min(h, s.h_cap / m_max)
    return h


def _solve_interval(M: ModelManifold, a: float, b: float, neumann: bool,
                    s: SpectralSettings) -> _Solve:
    """Smallest eigenvalue on ``(a, b)``; Dirichlet at ``b`` and at ``a`` unless ``neumann``."""
    h0 = _step(M, a, b, s)
    N = int(math.ceil((b - a) / h0))
    if N + 1 > s.max_nodes:
        raise BudgetExceededError(f"spectral grid needs {N + 1} nodes")
    N = max(N, 8)
    h = (b - a) / N
    r = a + h * np.arange(N + 1)
    mid = r[:-1] + 0.5 * h
    wl = M.weight_log_ratio
    # log w at the unknowns; node 0 of a Neumann problem at the pole gets a dual-cell mass
    first = 0 if neumann else 1
    idx = np.arange(first, N)
    ri = r[idx]
    if neumann:
        if a != 0.0:
            raise PreconditionError("the natural boundary condition is only used at the pole")
        dual = integrate(lambda t: np.exp(M.log_weight(t)), 0.0, 0.5 * h, tol=1e-300, rtol=1e-13)
        log_w0 = math.log(dual.value / h)
    # d_i = (w_{i-1/2} + w_{i+1/2}) / (h^2 w_i)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        right = np.exp(wl(ri, mid[idx]))
        left = np.zeros_like(right)
        inner = idx >= 1
        left[inner] = np.exp(wl(ri[inner], mid[idx[inner] - 1]))
        off = -np.exp(0.5 * (wl(ri[:-1], mid[idx[:-1]]) + wl(ri[1:], mid[idx[:-1]])))
    if neumann:
        right[0] = math.exp(float(M.log_weight(mid[0])) - log_w0)
        off[0] = -math.exp(float(M.log_weight(mid[0])) - 0.5 * (log_w0 + float(M.log_weight(r[1]))))
    diag = (left + right) / (h * h)
    off = off / (h * h)
    lam, v = smallest_eigenpair(diag, off, np.ones_like(diag))
    # the spectrum is non-negative; clip round-off below zero
    lam = max(lam, 0.0)
    y = np.zeros(N + 1)
    y[idx] = v
    rq = _continuous_rayleigh(M, r, y, h, log_w0 if neumann else None)
    return _Solve(lam, rq, N + 1)


def _continuous_rayleigh(M: ModelManifold, r, y, h, log_w0) -> float:
    """Rayleigh quotient of the piecewise-linear interpolant of the nodal values.

    ``y`` holds ``v * sqrt(w)`` at each node; for a Neumann pole node the
    dual-cell weight ``exp(log_w0)`` plays the role of ``w``.
    """
    x, wq = gauss_legendre(8)
    t = r[:-1, None] + h * x[None, :]
    lo = r[:-1, None] * np.ones_like(t)
    hi = r[1:, None] * np.ones_like(t)
    with np.errstate(divide="ignore", invalid="ignore"):
        e_lo = np.exp(0.5 * M.weight_log_ratio(np.where(lo > 0, lo, 1.0), t))
        if log_w0 is not None:
            e_lo[0] = np.exp(0.5 * (M.log_weight(t[0]) - log_w0))
        e_hi = np.exp(0.5 * M.weight_log_ratio(hi, t))
    yl = y[:-1, None]
    yh = y[1:, None]
    val = yl * e_lo * (1 - x[None, :]) + yh * e_hi * x[None, :]
    der = (yh * e_hi - yl * e_lo) / h
    num = float(np.sum((der * der) @ wq))
    den = float(np.sum((val * val) @ wq))
    return num / den


def _m_range(M: ModelManifold, lo: float, hi: float | None) -> tuple[float, float]:
    """Infimum and supremum of ``(n-1) phi'/phi`` on ``(lo, hi)``; ``hi=None`` means infinity."""
    top = M.r_max if hi is None else min(hi, M.r_max)
    start = max(lo, 1e-9)
    probe = np.union1d(np.linspace(start, top, 8193), np.geomspace(start, top, 2049))
    m = (M.n - 1) * M.warping.dlog(probe)
    m_inf, m_sup = float(np.min(m)), float(np.max(m))
    if lo <= 0:
        m_sup = math.inf
    if hi is None:
        lim = M.warping.dlog_limit()
        if lim is not None:
            m_inf = min(m_inf, (M.n - 1) * lim)
            m_sup = max(m_sup, (M.n - 1) * lim)
    return m_inf, m_sup


def barta_lower_bound(M: ModelManifold, D: RadialDomain) -> float:
    """Certified lower bound ``a^2/4`` from the test function ``exp(-/+ a r / 2)``.

    ``a`` is the infimum of the mean curvature of distance spheres over the
    domain when that is positive, or minus its supremum when that is
    negative; otherwise the bound is 0.
    """
    if D.kind == "exterior":
        m_inf, m_sup = _m_range(M, D.r1, None)
    elif D.kind == "annulus":
        m_inf, m_sup = _m_range(M, D.r1, D.r2)
    else:
        m_inf, m_sup = _m_range(M, 0.0, None)
    if m_inf > 0:
        a = m_inf
    elif m_sup < 0:
        a = -m_sup
    else:
        return 0.0
    return 0.25 * a * a


def _ladder_solve(M: ModelManifold, a: float, neumann: bool, s: SpectralSettings):
    offsets = list(s.ladder)
    results: list[tuple[float, _Solve]] = []
    converged = False
    k = 0
    while True:
        d = offsets[k] if k < len(offsets) else offsets[-1] * 2 ** (k - len(offsets) + 1)
        L = a + d
        capped = L >= M.r_max
        if capped:
            L = M.r_max
        if results and L <= results[-1][0]:
            break
        results.append((L, _solve_interval(M, a, L, neumann, s)))
        if len(results) >= 2:
            prev, cur = results[-2][1].value, results[-1][1].value
            if abs(prev - cur) <= s.convergence_tol * abs(cur):
                converged = True
                break
        if capped:
            break
        k += 1
    return results, converged


def lambda1(M: ModelManifold, D: RadialDomain,
            settings: SpectralSettings | None = None) -> SpectralEstimate:
    """Discrete estimate of the bottom of the spectrum on ``D``.

    Exteriors and the whole manifold are truncated at a ladder of outer
    radii; the estimate decreases along the ladder and the last rung is
    reported. ``converged`` says whether the last two rungs agree to the
    configured relative tolerance.
    """
    s = settings or SpectralSettings()
    barta = barta_lower_bound(M, D)
    if D.kind == "annulus":
        if D.r2 > M.r_max:
            raise DomainError("annulus exceeds r_max")
        sol = _solve_interval(M, D.r1, D.r2, False, s)
        return SpectralEstimate(sol.value, barta, sol.rayleigh, D.r2, True, ((D.r2, sol.value),))
    a = D.r1 if D.kind == "exterior" else 0.0
    if a >= M.r_max:
        raise DomainError("exterior radius must be below r_max")
    results, converged = _ladder_solve(M, a, D.kind == "whole", s)
    L, last = results[-1]
    return SpectralEstimate(last.value, barta, last.rayleigh, L, converged,
                            tuple((r, sol.value) for r, sol in results))


@dataclass(frozen=True)
class EssentialSpectrum:
    estimate: SpectralEstimate
    radii: tuple[float, ...]
    values: tuple[float, ...]

    @property
    def value(self) -> float:
        return self.estimate.value

    @property
    def gap_vanishes(self) -> bool:
        """Whether the last exterior estimate behaves like ``c / d^2`` in the truncation length ``d``.

        A Dirichlet problem on an exterior truncated at length ``d`` has
        eigenvalue about ``lambda_ess + c/d^2``; with no gap, ``lambda d^2``
        stays flat along the ladder instead of growing like ``d^2``.
        """
        if self.estimate.converged or len(self.estimate.ladder) < 2:
            return self.value <= GAP_FLOOR
        R = self.radii[-1]
        (L0, v0), (L1, v1) = self.estimate.ladder[-2:]
        growth = (v1 * (L1 - R) ** 2) / (v0 * (L0 - R) ** 2) if v0 > 0 else 1.0
        return self.value <= GAP_FLOOR or growth < 1.2

    def to_dict(self) -> dict:
        return {**self.estimate.to_dict(), "exterior_radii": list(self.radii),
                "exterior_values": list(self.values), "gap_vanishes": self.gap_vanishes}


def default_ess_radii(M: ModelManifold) -> list[float]:
    radii = []
    R = 1.0
    while R + DEFAULT_LADDER[0] <= M.r_max and R <= 32.0:
        radii.append(R)
        R *= 2
    if len(radii) < 2:
        raise DomainError("r_max too small for an exterior radius ladder")
    return radii


def lambda1_ess(M: ModelManifold, radii=None,
                settings: SpectralSettings | None = None) -> EssentialSpectrum:
    """Bottom of the essential spectrum as the limit of exterior eigenvalues.

    Raises:
        ConsistencyError: exterior values decrease along the radius ladder by
            more than twice the ladder tolerance.
    """
    s = settings or SpectralSettings()
    radii = list(radii) if radii is not None else default_ess_radii(M)
    ests = [lambda1(M, RadialDomain.exterior(R), s) for R in radii]
    vals = [e.value for e in ests]
    for R0, R1, v0, v1 in zip(radii[:-1], radii[1:], vals[:-1], vals[1:]):
        if v1 < v0 - 2 * s.convergence_tol * max(abs(v0), 1e-12):
            raise ConsistencyError(
                f"exterior eigenvalue dropped from {v0:.6g} (R={R0}) to {v1:.6g} (R={R1})")
    return EssentialSpectrum(ests[-1], tuple(radii), tuple(vals))
