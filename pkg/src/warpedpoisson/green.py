"""Radial Green's functions on model manifolds and level sets of them.

Everything is expressed through the scaled kernel

    Gs(r) = phi^{n-1}(r) int_r^inf phi^{1-n}(t) dt,

which stays of moderate size where ``phi`` itself overflows. With ``omega``
the area of the unit sphere, the minimal Green's function is
``G = Gs phi^{1-n} / omega``. The ``1/omega`` normalization makes
``-Delta G = delta_p`` exactly, so the flux of ``G`` through every distance
sphere is one and ``|G'|/G = 1/Gs``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import brentq

from .errors import (
    BudgetExceededError,
    DomainError,
    InversionError,
    InvalidConstructionError,
    NotNonParabolicError,
    PreconditionError,
)
from .geometry import ModelManifold, classify, curvature_scales, volume_ball
from .kernels import (
    POLE_EDGE,
    BackwardTransform,
    ForwardTransform,
    adapted_edges,
    green_scale_table,
)
from .numerics import (
    TailEnvelope,
    cell_integrals,
    central_derivatives,
    gauss_legendre,
    integrate,
)

LEVEL_XTOL = 1e-12
_FD1 = np.array([-1.0, 9.0, -45.0, 0.0, 45.0, -9.0, 1.0]) / 60.0


def _arr(r) -> np.ndarray:
    return np.atleast_1d(np.asarray(r, dtype=float))


def scale_envelope(env: TailEnvelope, factor: float) -> TailEnvelope:
    return TailEnvelope(env.start, env.value * factor, env.exponent, env.rate)


def green_scale(M: ModelManifold) -> tuple[BackwardTransform, bool]:
    """Tabulated ``Gs`` on as much of ``[0, r_max]`` as the cell budget allows.

    Returns the transform and whether the tail past ``r_max`` had to be
    dropped (profiles without a closed-form majorant).
    """
    c = -(M.n - 1)
    if M.warping.ratio_envelope(1.0, c) is None:
        edges = adapted_edges(M, c, M.r_max)
        return BackwardTransform(M, np.ones_like, c, edges, None), True
    hi = M.r_max
    while True:
        try:
            return green_scale_table(M, hi), False
        except BudgetExceededError:
            hi /= 2.0
            if hi < 2.0:
                raise


@dataclass(frozen=True)
class LevelSetAnnulus:
    a: float
    b: float
    inner_radius: float
    outer_radius: float

    def to_dict(self) -> dict:
        return {"a": self.a, "b": self.b, "inner_radius": self.inner_radius,
                "outer_radius": self.outer_radius}


@dataclass(frozen=True, eq=False)
class GreenProfile:
    """A radial Green's function with samples on a reference grid.

    ``kind`` is ``minimal``, ``dirichlet`` (vanishing at ``R``) or
    ``parabolic`` (solves ``-Delta G = delta_p - 1/V`` with zero mean).
    """

    kind: str
    manifold: ModelManifold
    radii: np.ndarray
    values: np.ndarray
    normalization: float
    tolerance: float
    R: float | None = None
    truncated: bool = False
    volume: float | None = None
    diagnostics: dict = field(default_factory=dict)
    _scaled: Callable | None = field(default=None, repr=False)
    _direct: Callable | None = field(default=None, repr=False)
    _slope: Callable | None = field(default=None, repr=False)

    def scaled(self, r) -> np.ndarray:
        """``omega phi^{n-1} G``; for the minimal kind this is ``Gs``."""
        if self._scaled is None:
            raise PreconditionError("the parabolic kind changes sign and has no scaled form")
        return self._scaled(_arr(r))

    def log_value(self, r) -> np.ndarray:
        r = _arr(r)
        M = self.manifold
        with np.errstate(divide="ignore"):
            out = np.log(self.scaled(r)) - M.log_weight(np.where(r > 0, r, 1.0)) \
                - math.log(M.sphere_area_const)
        return np.where(r > 0, out, np.inf)

    def __call__(self, r) -> np.ndarray:
        if self._direct is not None:
            return self._direct(_arr(r))
        return np.exp(self.log_value(r))

    def derivative(self, r) -> np.ndarray:
        """Exact ``G'`` from the flux law."""
        r = _arr(r)
        if self._slope is not None:
            return self._slope(r)
        M = self.manifold
        d = -np.exp(-M.log_weight(r)) / M.sphere_area_const
        if self.kind == "dirichlet":
            d = np.where(r <= self.R, d, 0.0)
        return d

    def to_rows(self) -> list[tuple[float, float]]:
        return [(float(r), float(v)) for r, v in zip(self.radii, self.values)]

    def to_dict(self) -> dict:
        return {"kind": self.kind, "R": self.R, "normalization": self.normalization,
                "tolerance": self.tolerance, "truncated": self.truncated,
                "volume": self.volume, "samples": len(self.radii),
                **({"diagnostics": self.diagnostics} if self.diagnostics else {})}


def _sample_grid(lo: float, hi: float, count: int = 200) -> np.ndarray:
    return np.geomspace(lo, hi, count)


def minimal_green(M: ModelManifold) -> GreenProfile:
    """``G(r) = (1/omega) int_r^inf phi^{1-n}``.

    Raises:
        NotNonParabolicError: the integral diverges; use ``parabolic_green``
            on finite-volume manifolds.
    """
    if not classify(M).non_parabolic:
        raise NotNonParabolicError(
            "no minimal positive Green's function: int^inf phi^(1-n) diverges; "
            "use parabolic_green for finite-volume manifolds")
    table, truncated = green_scale(M)
    G = GreenProfile("minimal", M, np.empty(0), np.empty(0), 1.0 / M.sphere_area_const,
                     1e-12, truncated=truncated, _scaled=table)
    radii = _sample_grid(1e-3, M.r_max)
    object.__setattr__(G, "radii", radii)
    object.__setattr__(G, "values", G(radii))
    return G


def dirichlet_green(M: ModelManifold, R: float) -> GreenProfile:
    """``G_R(r) = (1/omega) int_r^R phi^{1-n}`` inside the ball, zero outside."""
    R = float(R)
    if not 0 < R <= M.r_max:
        raise DomainError(f"R must lie in (0, {M.r_max}]")
    c = -(M.n - 1)
    table = BackwardTransform(M, np.ones_like, c, adapted_edges(M, c, R), None)
    G = GreenProfile("dirichlet", M, np.empty(0), np.empty(0), 1.0 / M.sphere_area_const,
                     1e-12, R=R, _scaled=table)
    radii = _sample_grid(min(1e-3, R / 10), R)
    object.__setattr__(G, "radii", radii)
    object.__setattr__(G, "values", G(radii))
    return G


class _TailVolume:
    """``T(r) = phi^{1-n}(r) int_r^inf phi^{n-1}`` and the total volume ``V``.

    The volume outside ``B_r`` is ``omega phi^{n-1}(r) T(r)``.
    """

    def __init__(self, M: ModelManifold):
        c = M.n - 1
        if M.warping.ratio_envelope(1.0, c) is None:
            raise InvalidConstructionError("no decaying majorant for phi^(n-1); volume is not certified")
        self.M = M
        self.edges = np.union1d(adapted_edges(M, c, M.r_max), [1.0, *M.warping.joints])
        self.T = BackwardTransform(M, np.ones_like, c, self.edges, TailEnvelope(M.r_max, 1.0))
        self.F = ForwardTransform(M, np.ones_like, c, self.edges)
        w1 = math.exp(float(M.log_weight(np.array([1.0]))[0]))
        self.V = volume_ball(M, 1.0) + M.sphere_area_const * w1 * float(self.T(1.0)[0])

    def outside(self, r) -> np.ndarray:
        r = _arr(r)
        return self.M.sphere_area_const * np.exp(self.M.log_weight(r)) * self.T(r)

    def inside(self, r) -> np.ndarray:
        r = _arr(r)
        return self.M.sphere_area_const * np.exp(self.M.log_weight(r)) * self.F(r)


def parabolic_green(M: ModelManifold) -> GreenProfile:
    """Mean-zero Green's function of a parabolic finite-volume model.

    Solves ``omega phi^{n-1} G' = -(1 - Vol(B_r)/V)``, i.e. ``G' = -T/V``,
    and fixes the constant so that ``int G dV = 0``. The constant is
    obtained by exchanging the order of integration; the mean is then
    re-measured by direct quadrature and reported.
    """
    cls = classify(M)
    if cls.non_parabolic:
        raise InvalidConstructionError("manifold is non-parabolic; use minimal_green")
    if not cls.finite_volume:
        raise InvalidConstructionError("parabolic Green's function needs finite volume")
    tv = _TailVolume(M)
    V = tv.V
    omega = M.sphere_area_const

    def k(t):
        return tv.T(t) / V

    edges = tv.edges[tv.edges >= POLE_EDGE]
    cells = cell_integrals(k, edges, q=16)
    # g(e_i) = int_{e_i}^1 k
    i1 = int(np.flatnonzero(edges == 1.0)[0])
    g_edges = np.empty(edges.size)
    g_edges[i1] = 0.0
    g_edges[:i1] = np.cumsum(cells[:i1][::-1])[::-1]
    g_edges[i1 + 1:] = -np.cumsum(cells[i1:])

    def g(r):
        r = _arr(r)
        if np.any(r < POLE_EDGE) or np.any(r > edges[-1] * (1 + 1e-14)):
            raise DomainError(f"parabolic profile is tabulated on [{POLE_EDGE}, {edges[-1]}]")
        idx = np.clip(np.searchsorted(edges, r, side="right") - 1, 0, edges.size - 2)
        hi = edges[idx + 1]
        part = cell_integrals_between(k, r, hi)
        return g_edges[idx + 1] + part

    w = lambda t: np.exp(M.log_weight(t))
    joints = [j for j in M.warping.joints if 0 < j < 1]
    inner = integrate(lambda t: k(t) * tv.inside(t), 0.0, 1.0, tol=1e-300, rtol=1e-13, breakpoints=joints)
    outer = integrate(lambda t: omega * w(t) * tv.T(t) ** 2 / V, 1.0, M.r_max,
                      tol=1e-300, rtol=1e-13)
    shift = (inner.value - outer.value) / V

    def gbar(r):
        return g(r) - shift

    mean_integrand = lambda t: gbar(np.maximum(t, POLE_EDGE)) * omega * w(t)
    breaks = [*M.warping.joints, 1.0]
    # the signed mean is near zero, so its tolerance is set by the mass of |G|
    mass = integrate(lambda t: np.abs(mean_integrand(t)), POLE_EDGE, M.r_max, tol=1e-300,
                     rtol=1e-8, breakpoints=breaks)
    check = integrate(mean_integrand, POLE_EDGE, M.r_max, tol=1e-13 * mass.value, rtol=1e-13,
                      breakpoints=breaks)
    # the ball B_{POLE_EDGE} holds |G| ~ r^{2-n}, so its share of the mean is ~ POLE_EDGE^2
    mean = check.value
    radii = _sample_grid(1e-3, M.r_max)
    G = GreenProfile("parabolic", M, radii, gbar(radii), 1.0 / omega, 1e-12, volume=V,
                     diagnostics={"mean": mean, "shift": shift,
                                  "volume_direct": volume_ball(M, M.r_max)},
                     _direct=gbar, _slope=lambda r: -k(r))
    return G


def cell_integrals_between(fn, lo: np.ndarray, hi: np.ndarray, q: int = 16) -> np.ndarray:
    """``int_lo^hi fn`` elementwise on short intervals, by Gauss-Legendre."""
    lo = _arr(lo)
    hi = _arr(hi)
    nodes, w = gauss_legendre(q)
    width = hi - lo
    t = lo[:, None] + width[:, None] * nodes[None, :]
    y = np.asarray(fn(t.ravel()), dtype=float).reshape(t.shape)
    return width * (y @ w)


def radius_of_level(G: GreenProfile, s: float, max_radius: float | None = None) -> float:
    """Radius where the decreasing profile ``G`` takes the value ``s``."""
    if G.kind == "parabolic":
        raise PreconditionError("level sets are defined for the minimal and Dirichlet kinds")
    if not s > 0 or not math.isfinite(s):
        raise DomainError("level must be positive and finite")
    M = G.manifold
    log_s = math.log(s)
    top = G.R if G.kind == "dirichlet" else (max_radius or M.r_max)

    def fn(r):
        v = float(G.log_value(r)[0]) - log_s
        return max(v, -1e300)

    lo = min(1.0, 0.5 * top)
    while fn(lo) <= 0:
        lo *= 0.5
        if lo < 1e-300:
            raise InversionError(f"level {s!r} exceeds G near the pole")
    hi = min(1.0, top)
    while fn(hi) > 0:
        if hi >= top:
            raise InversionError(
                f"level {s!r} lies below G({top!r}) = {float(G(top)[0])!r}; "
                "raise max_radius or r_max")
        hi = min(2.0 * hi, top)
    if fn(hi) == 0:
        return hi
    return brentq(fn, lo, hi, xtol=LEVEL_XTOL, rtol=4 * np.finfo(float).eps, maxiter=500)


def level_set(G: GreenProfile, a: float, b: float, max_radius: float | None = None) -> LevelSetAnnulus:
    """The annulus ``{a < G < b}``; ``b = inf`` gives a ball, ``a = 0`` an exterior."""
    if not 0 <= a < b:
        raise DomainError("need 0 <= a < b")
    inner = 0.0 if math.isinf(b) else radius_of_level(G, b, max_radius)
    if a == 0:
        outer = G.R if G.kind == "dirichlet" else math.inf
    else:
        outer = radius_of_level(G, a, max_radius)
    return LevelSetAnnulus(float(a), float(b), float(inner), float(outer))


def level_set_mass(M: ModelManifold, G: GreenProfile, annulus: LevelSetAnnulus) -> float:
    """``int G dV`` over the annulus, i.e. ``int Gs dr`` between its radii."""
    lo, hi = annulus.inner_radius, annulus.outer_radius
    if hi <= lo:
        return 0.0
    joints = list(M.warping.joints)
    if math.isinf(hi):
        env = M.warping.green_scale_envelope(M.n)
        if env is None or not env.summable:
            return math.inf
        head = integrate(G.scaled, lo, max(lo, env.start) + 1.0, tol=1e-300, rtol=1e-12,
                         breakpoints=joints)
        scale = max(abs(head.value), 1e-300)
        return integrate(G.scaled, lo, math.inf, tol=1e-12 * scale, rtol=1e-12,
                         envelope=env, breakpoints=joints).value
    return integrate(G.scaled, lo, hi, tol=1e-300, rtol=1e-12, breakpoints=joints).value


def flux_on_level(M: ModelManifold, G: GreenProfile, s: float, step: float = 0.005) -> float:
    """``|G'| omega phi^{n-1}`` on the sphere ``{G = s}``.

    ``G'`` is measured by a sixth-order central difference of ``log G``,
    so the value tests the tabulated profile rather than restating the
    flux law.
    """
    r = radius_of_level(G, s)
    h = step * min(r, 1.0)
    # keep the stencil on one smooth piece of a spliced profile
    for j in M.warping.joints:
        d = abs(r - j)
        if 1e-6 * r < d < 3 * h:
            h = d / 3
    if G.kind == "dirichlet":
        h = min(h, 0.2 * (G.R - r))
    logs = G.log_value(r + h * np.arange(-3, 4))
    dlog = float(_FD1 @ logs) / h
    return abs(dlog) * float(G.scaled(r)[0])


@dataclass(frozen=True)
class TailL2:
    value: float
    error_estimate: float
    truncated: bool
    upper_limit: float

    def to_dict(self) -> dict:
        return {"value": self.value, "error_estimate": self.error_estimate,
                "truncated": self.truncated, "upper_limit": self.upper_limit}


def tail_l2(M: ModelManifold, G: GreenProfile, R: float) -> TailL2:
    """``int_{M \\ B_R} G^2 dV``.

    The integral runs to infinity when a summable majorant is known and is
    otherwise cut at ``r_max`` and flagged ``truncated``.
    """
    R = float(R)
    if not 0 < R < M.r_max:
        raise DomainError(f"R must lie in (0, {M.r_max})")
    omega = M.sphere_area_const
    lw_R = float(M.log_weight(np.array([R]))[0])
    joints = [j for j in M.warping.joints if j > R]
    if G.kind == "parabolic":
        # omega phi^{n-1}(R) int_R G(t)^2 (phi(t)/phi(R))^{n-1} dt
        fn = lambda t: G(t) ** 2 * np.exp(M.weight_log_ratio(R, t))
        top = M.r_max
        res = integrate(fn, R, top, tol=1e-300, rtol=1e-12, breakpoints=joints)
        edge = float(fn(np.array([top]))[0]) * (top - R)
        truncated = edge > 1e-12 * abs(res.value)
        factor = omega * math.exp(lw_R)
        return TailL2(factor * res.value, factor * res.error_estimate, truncated, top)
    # G^2 omega phi^{n-1} = Gs^2 phi^{1-n} / omega
    fn = lambda t: G.scaled(t) ** 2 * np.exp(-M.weight_log_ratio(R, t))
    factor = math.exp(-lw_R) / omega
    gs_env = M.warping.green_scale_envelope(M.n)
    ratio = M.warping.ratio_envelope(R, -(M.n - 1))
    env = None
    if gs_env is not None and ratio is not None and not G.truncated and G.kind == "minimal":
        env = gs_env.times(gs_env).times(ratio) if gs_env.start <= ratio.start \
            else ratio.times(gs_env.times(gs_env))
        if not env.summable:
            env = None
    if env is None:
        top = G.R if G.kind == "dirichlet" else M.r_max
        res = integrate(fn, R, top, tol=1e-300, rtol=1e-12, breakpoints=joints)
        return TailL2(factor * res.value, factor * res.error_estimate, True, top)
    head = integrate(fn, R, R + 1.0, tol=1e-300, rtol=1e-10, breakpoints=joints)
    res = integrate(fn, R, math.inf, tol=1e-12 * max(head.value, 1e-300), rtol=1e-12,
                    envelope=env, breakpoints=joints)
    return TailL2(factor * res.value, factor * res.error_estimate, False, math.inf)


@dataclass(frozen=True)
class GradientRatioProfile:
    radii: np.ndarray
    ratio: np.ndarray
    sup: float
    argsup: float

    def to_dict(self) -> dict:
        return {"sup": self.sup, "argsup": self.argsup, "points": int(self.radii.size)}


def gradient_ratio_profile(M: ModelManifold, G: GreenProfile, points: int = 600) -> GradientRatioProfile:
    """``r -> (|G'|/G) / sqrt(K(r+1))`` on ``[3 eps0, r_max - 1]`` and its supremum.

    For the minimal kind ``|G'|/G = 1/Gs`` exactly.
    """
    if G.kind != "minimal":
        raise PreconditionError("the gradient ratio is defined for the minimal kind")
    lo, hi = 3.0 * M.eps0, M.r_max - 1.0
    if not lo < hi:
        raise DomainError("r_max is too small for the gradient-ratio range")
    radii = np.union1d(np.geomspace(lo, hi, points // 2), np.linspace(lo, hi, points // 2))
    K = np.array([c.K for c in curvature_scales(M, radii + 1.0)])
    ratio = 1.0 / (G.scaled(radii) * np.sqrt(K))
    i = int(np.argmax(ratio))
    return GradientRatioProfile(radii, ratio, float(ratio[i]), float(radii[i]))


def radial_laplacian(M: ModelManifold, r: np.ndarray, u: np.ndarray,
                     joints=()) -> tuple[np.ndarray, np.ndarray]:
    """Sixth-order finite-difference ``u'' + m u'`` on a uniform grid.

    Stencils that straddle a point where the data are only piecewise smooth
    are dropped.
    """
    h = float(r[1] - r[0])
    d1, d2 = central_derivatives(u, h)
    ri = r[3:-3]
    lap = d2 + (M.n - 1) * M.warping.dlog(ri) * d1
    keep = np.ones(ri.size, dtype=bool)
    for j in joints:
        keep &= np.abs(ri - j) >= 3 * h * (1 - 1e-9)
    return ri[keep], lap[keep]


def parabolic_residual(G: GreenProfile, r_lo: float = 0.2, r_hi: float = 10.0,
                       h: float = 0.01) -> float:
    """``max |-Delta G + 1/V|`` on a uniform interior grid."""
    if G.kind != "parabolic":
        raise PreconditionError("residual of -Delta G = -1/V needs the parabolic kind")
    M = G.manifold
    n = int(round((r_hi - r_lo) / h))
    r = np.linspace(r_lo, r_hi, n + 1)
    ri, lap = radial_laplacian(M, r, G(r), M.warping.joints)
    return float(np.max(np.abs(-lap + 1.0 / G.volume)))
