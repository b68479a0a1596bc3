"""Radial solutions of ``-Delta u = f``.

On non-parabolic models the potential is

    u(r) = int_r^inf H(s) ds,   H(s) = phi^{1-n}(s) int_0^s f phi^{n-1},

and at the pole it equals ``int_0^inf f Gs``. Both routes are evaluated and
compared. On parabolic models of finite volume a radial bump ``b`` of unit
mass absorbs the average of ``f``: ``u = u_bar + alpha psi`` with
``-Delta psi = b`` and ``-Delta u_bar = f - alpha b``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import (
    InvalidConstructionError,
    NotNonParabolicError,
    PreconditionError,
    ZeroAverageViolationError,
)
from .geometry import ModelManifold, classify
from .green import (
    _TailVolume,
    cell_integrals_between,
    green_scale,
    parabolic_green,
    radial_laplacian,
    scale_envelope,
)
from .kernels import BackwardTransform, ForwardTransform, adapted_edges
from .numerics import TailEnvelope, fit_log_slope, integrate

ArrayFn = Callable[[np.ndarray], np.ndarray]

GROWTH_RADII = (50.0, 100.0, 200.0, 400.0)
GROWTH_MARGIN = 0.02


@dataclass(frozen=True, eq=False)
class RadialSource:
    """A radial source ``f`` with an optional majorant of ``|f|`` for large ``r``."""

    name: str
    f: ArrayFn
    envelope: TailEnvelope | None
    joints: tuple[float, ...] = ()
    params: dict = field(default_factory=dict)

    def __call__(self, r) -> np.ndarray:
        return np.asarray(self.f(np.asarray(r, dtype=float)), dtype=float)

    @classmethod
    def power(cls, alpha: float) -> "RadialSource":
        """``(1 + r)^(-alpha)``."""
        a = float(alpha)
        # (1+t)^-a <= t^-a for a >= 0, and <= (2t)^-a for a < 0, once t >= 1
        env = TailEnvelope(1.0, 1.0 if a >= 0 else 2.0 ** (-a), exponent=a)
        return cls("power", lambda r: (1.0 + r) ** (-a), env, params={"alpha": a})

    @classmethod
    def expdecay(cls, c: float) -> "RadialSource":
        """``exp(-c r)`` with ``c > 0``."""
        c = float(c)
        if not c > 0:
            raise PreconditionError("expdecay rate must be positive")
        return cls("expdecay", lambda r: np.exp(-c * r), TailEnvelope(1.0, math.exp(-c), rate=c),
                   params={"c": c})

    @classmethod
    def zero(cls) -> "RadialSource":
        return cls("zero", np.zeros_like, TailEnvelope(1.0, 0.0, rate=1.0))

    @classmethod
    def sampled(cls, r, values) -> "RadialSource":
        """Cubic spline through samples; zero beyond the last radius."""
        r = np.asarray(r, dtype=float)
        v = np.asarray(values, dtype=float)
        if r.ndim != 1 or r.size < 4 or v.shape != r.shape:
            raise PreconditionError("sampled source needs at least 4 (r, f) pairs")
        if r[0] != 0.0 or np.any(np.diff(r) <= 0):
            raise PreconditionError("sampled source radii must start at 0 and increase")
        if not np.all(np.isfinite(v)):
            raise PreconditionError("sampled source values must be finite")
        spline = CubicSpline(r, v)
        top = float(r[-1])

        def f(x):
            x = np.asarray(x, dtype=float)
            return np.where(x <= top, spline(np.minimum(x, top)), 0.0)

        joints = (top,) if abs(v[-1]) > 0 else ()
        return cls("sampled", f, TailEnvelope(top, 0.0, rate=1.0), joints,
                   {"samples": int(r.size), "support": top})

    @classmethod
    def bump(cls, M: ModelManifold) -> "RadialSource":
        """``c_b (1 - r^2)^3`` on ``[0, 1]`` with unit mass on ``M``."""
        res = integrate(lambda t: (1.0 - t * t) ** 3 * np.exp(M.log_weight(t)), 0.0, 1.0,
                        tol=1e-300, rtol=1e-14, breakpoints=M.warping.joints)
        cb = 1.0 / (M.sphere_area_const * res.value)
        f = lambda r: np.where(r < 1.0, cb * (1.0 - r * r) ** 3, 0.0)
        return cls("bump", f, TailEnvelope(1.0, 0.0, rate=1.0), (1.0,), {"constant": cb})

    def describe(self) -> dict:
        return {"name": self.name, **self.params}


def _product(a: TailEnvelope | None, b: TailEnvelope | None) -> TailEnvelope | None:
    if a is None or b is None:
        return None
    return a.times(b) if a.start >= b.start else b.times(a)


@dataclass(frozen=True)
class PotentialGrowth:
    """Growth of the partial pole integrals ``I(T) = int_0^T f Gs``.

    ``growth_exponent`` is one plus the log-log slope of ``|f| Gs`` over the
    truncation radii, the exponent with which ``I(T)`` grows (or, when
    negative, with which its tail decays).
    """

    status: str
    growth_exponent: float
    radii: tuple[float, ...]
    partial_integrals: tuple[float, ...]
    increments_decreasing: bool
    value_estimate: float | None = None

    def to_dict(self) -> dict:
        return {"status": self.status, "growth_exponent": self.growth_exponent,
                "radii": list(self.radii), "partial_integrals": list(self.partial_integrals),
                "increments_decreasing": self.increments_decreasing,
                "value_estimate": self.value_estimate}


@dataclass(frozen=True, eq=False)
class RadialSolution:
    radii: np.ndarray
    values: np.ndarray
    residual_rms: float
    value_at_pole: float
    diagnostics: dict = field(default_factory=dict)
    status: str = "finite"

    def to_rows(self) -> list[tuple[float, float]]:
        return [(float(r), float(v)) for r, v in zip(self.radii, self.values)]

    def to_dict(self) -> dict:
        return {"status": self.status, "value_at_pole": self.value_at_pole,
                "residual_rms": self.residual_rms, "samples": int(self.radii.size),
                **self.diagnostics}


def growth_radii(M: ModelManifold) -> tuple[float, ...]:
    radii = tuple(T for T in GROWTH_RADII if T <= M.r_max)
    if len(radii) < 4:
        radii = tuple(M.r_max / 2 ** k for k in (3, 2, 1, 0))
    return radii


def potential_growth(M: ModelManifold, source: RadialSource, radii=None) -> PotentialGrowth:
    """Classify ``int_0^inf f Gs`` from its partial integrals.

    ``divergent`` when the growth exponent exceeds the margin, ``finite``
    when it is below minus the margin and the increments between radii
    shrink, ``boundary`` otherwise.
    """
    Gs, _ = green_scale(M)
    radii = tuple(float(T) for T in (radii or growth_radii(M)))
    integrand = lambda t: source(t) * Gs(t)
    joints = [j for j in M.warping.joints] + list(source.joints)
    partial = []
    acc = 0.0
    lo = 0.0
    for T in radii:
        res = integrate(integrand, lo, T, tol=1e-300, rtol=1e-10,
                        breakpoints=[j for j in joints if lo < j < T])
        acc += res.value
        partial.append(acc)
        lo = T
    x = np.array(radii)
    y = np.abs(integrand(x))
    if np.all(y > 0):
        growth = 1.0 + fit_log_slope(x, y).slope
    else:
        growth = -math.inf
    incr = np.abs(np.diff(partial))
    decreasing = bool(np.all(incr[1:] < incr[:-1])) if incr.size >= 2 else True
    if growth > GROWTH_MARGIN:
        status = "divergent"
    elif growth < -GROWTH_MARGIN and decreasing:
        status = "finite"
    else:
        status = "boundary"
    estimate = None
    if status == "finite":
        # extrapolate the power-law tail beyond the last radius
        tail = float(y[-1]) * x[-1] / (-growth) if math.isfinite(growth) else 0.0
        estimate = partial[-1] + math.copysign(tail, partial[-1] or 1.0)
    return PotentialGrowth(status, growth, radii, tuple(partial), decreasing, estimate)


def pole_potential(M: ModelManifold, source: RadialSource, rtol: float = 1e-12):
    """``u(p) = int_0^inf f(t) Gs(t) dt`` with a certified tail.

    Returns ``(value, error_estimate)``, or ``None`` when ``f Gs`` has no
    summable majorant.
    """
    Gs, truncated = green_scale(M)
    env = None if truncated else _product(source.envelope, M.warping.green_scale_envelope(M.n))
    if env is None or not env.summable:
        return None
    integrand = lambda t: source(t) * Gs(t)
    joints = list(M.warping.joints) + list(source.joints)
    head_top = min(M.r_max, max(env.start, 10.0))
    head = integrate(integrand, 0.0, head_top, tol=1e-300, rtol=1e-8,
                     breakpoints=[j for j in joints if j < head_top])
    scale = max(abs(head.value), 1e-300)
    res = integrate(integrand, 0.0, math.inf, tol=rtol * scale, rtol=rtol, envelope=env,
                    breakpoints=joints)
    return res.value, res.error_estimate


def _uniform_grid(r_out: float, h: float) -> np.ndarray:
    n = max(int(round(r_out / h)), 8)
    return np.linspace(0.0, r_out, n + 1)


def _cumulative(fn: ArrayFn, grid: np.ndarray, breaks=()) -> np.ndarray:
    """``int_0^{grid_i} fn`` on a grid starting at 0, splitting cells at ``breaks``."""
    edges = np.union1d(grid, [b for b in breaks if grid[0] < b < grid[-1]])
    cells = cell_integrals_between(fn, edges[:-1], edges[1:])
    cum = np.concatenate([[0.0], np.cumsum(cells)])
    return cum[np.searchsorted(edges, grid)]


def _residual(M: ModelManifold, grid, u, source_fn, r_lo: float, joints) -> tuple[float, float]:
    ri, lap = radial_laplacian(M, grid, u, joints)
    mask = ri >= r_lo
    res = -lap[mask] - source_fn(ri[mask])
    if res.size == 0:
        return math.nan, math.nan
    return float(np.sqrt(np.mean(res * res))), float(np.max(np.abs(res)))


def solve_poisson(M: ModelManifold, source: RadialSource, *, r_out: float | None = None,
                  h: float = 0.01, r_lo: float = 0.2):
    """Radial potential of ``f`` on a non-parabolic model.

    Returns a :class:`RadialSolution` on ``[0, r_out]``, or a
    :class:`PotentialGrowth` report when the potential cannot be certified
    finite (no summable majorant for ``f Gs``).

    Raises:
        NotNonParabolicError: the manifold is parabolic.
    """
    if not classify(M).non_parabolic:
        raise NotNonParabolicError("solve_poisson needs a non-parabolic manifold; "
                                   "use solve_poisson_finite_volume")
    pole = pole_potential(M, source)
    if pole is None:
        return potential_growth(M, source)
    pole_value, pole_err = pole
    Gs, _ = green_scale(M)
    c = M.n - 1
    r_out = float(min(M.r_max, 10.0) if r_out is None else r_out)
    if not 0 < r_out <= M.r_max:
        raise PreconditionError(f"r_out must lie in (0, {M.r_max}]")
    joints = sorted(set(M.warping.joints) | set(source.joints))
    inner_joints = [j for j in joints if j < r_out]
    edges = np.union1d(adapted_edges(M, c, r_out), inner_joints)
    H = ForwardTransform(M, source, c, edges)
    env = _product(source.envelope, M.warping.green_scale_envelope(M.n))
    integrand = lambda t: source(t) * Gs(t)
    tail = integrate(integrand, r_out, math.inf, tol=max(1e-14 * abs(pole_value), 1e-300),
                     rtol=1e-13, envelope=env, breakpoints=[j for j in joints if j > r_out])
    u_out = float(H(r_out)[0] * Gs(r_out)[0]) + tail.value
    grid = _uniform_grid(r_out, h)
    cum = _cumulative(H, grid, inner_joints)
    u = u_out + (cum[-1] - cum)
    profile_pole = float(u[0])
    rms, worst = _residual(M, grid, u, source, r_lo, joints)
    gap = abs(profile_pole - pole_value) / max(abs(pole_value), 1e-300) if pole_value else abs(profile_pole)
    return RadialSolution(grid, u, rms, pole_value, {
        "pole_error_estimate": pole_err,
        "profile_value_at_pole": profile_pole,
        "fubini_gap": gap,
        "residual_max": worst,
        "r_out": r_out,
        "grid_step": float(grid[1] - grid[0]),
    })


def solve_poisson_finite_volume(M: ModelManifold, source: RadialSource, *, r_out: float = 6.0,
                                h: float = 0.005, r_lo: float = 0.2, tol: float = 1e-8,
                                cross_check: bool = True) -> RadialSolution:
    """``u = u_bar + alpha_avg psi`` on a parabolic model of finite volume.

    ``alpha_avg = int f dV``; ``u_bar`` solves ``-Delta u_bar = f - alpha_avg b``
    with zero mean and ``psi`` solves ``-Delta psi = b`` with ``psi(p) = 0``.

    Raises:
        ZeroAverageViolationError: the flux of ``f - alpha_avg b`` does not
            close up at infinity to ``tol``.
    """
    cls = classify(M)
    if cls.non_parabolic:
        raise InvalidConstructionError("manifold is non-parabolic; use solve_poisson")
    if not cls.finite_volume:
        raise InvalidConstructionError("the bump construction needs finite volume")
    if not 0 < r_out <= M.r_max:
        raise PreconditionError(f"r_out must lie in (0, {M.r_max}]")
    c = M.n - 1
    omega = M.sphere_area_const
    bump = RadialSource.bump(M)
    w1 = math.exp(float(M.log_weight(np.array([1.0]))[0]))
    ratio = M.warping.ratio_envelope(1.0, c)
    f_env = source.envelope
    joints = sorted(set(M.warping.joints) | set(source.joints) | {1.0})

    # alpha_avg = omega int f phi^{n-1}
    weight = lambda t: np.exp(M.log_weight(t))
    env = _product(f_env, scale_envelope(ratio, w1)) if ratio is not None else None
    head = integrate(lambda t: source(t) * weight(t), 0.0, 1.0, tol=1e-300, rtol=1e-13,
                     breakpoints=[j for j in joints if j < 1.0])
    if env is not None and env.summable:
        scale = max(abs(head.value), 1e-300)
        rest = integrate(lambda t: source(t) * weight(t), 1.0, math.inf, tol=1e-14 * scale,
                         rtol=1e-13, envelope=env, breakpoints=[j for j in joints if j > 1.0])
    else:
        rest = integrate(lambda t: source(t) * weight(t), 1.0, M.r_max, tol=1e-300, rtol=1e-13,
                         breakpoints=[j for j in joints if j > 1.0])
    alpha = omega * (head.value + rest.value)

    fbar = lambda t: source(t) - alpha * bump(t)
    inner_edges = np.union1d(adapted_edges(M, c, 1.0), [j for j in joints if j < 1.0])
    Hbar = ForwardTransform(M, fbar, c, inner_edges)
    Hb = ForwardTransform(M, bump, c, np.union1d(adapted_edges(M, c, r_out), joints))
    outer_edges = adapted_edges(M, c, M.r_max, include_pole=False)
    outer_edges = np.union1d([1.0], outer_edges[outer_edges > 1.0])
    g_env = f_env if (f_env is not None and ratio is not None) else None
    J = BackwardTransform(M, source, c, outer_edges, g_env)

    hbar1 = float(Hbar(1.0)[0])
    j1 = float(J(1.0)[0])
    mismatch = hbar1 + j1
    scale = max(abs(j1), abs(alpha * float(Hb(1.0)[0])), 1e-300)
    if abs(mismatch) > tol * scale:
        raise ZeroAverageViolationError(
            f"flux of f - alpha b does not vanish at infinity: {mismatch:.3e} (scale {scale:.3e})")

    def du_bar(t):
        t = np.asarray(t, dtype=float)
        out = np.empty_like(t)
        inside = t <= 1.0
        if inside.any():
            out[inside] = -Hbar(t[inside])
        if (~inside).any():
            out[~inside] = J(t[~inside])
        return out

    # u_bar(p) = (1/V) int_0^inf H_bar(s) Vol(M \ B_s) ds
    tv = _TailVolume(M)
    V = tv.V
    first = integrate(lambda s: Hbar(s) * tv.outside(s), 0.0, 1.0, tol=1e-300, rtol=1e-13,
                      breakpoints=[j for j in joints if j < 1.0])
    second = integrate(lambda s: -J(s) * tv.outside(s), 1.0, M.r_max, tol=1e-300, rtol=1e-13,
                       breakpoints=[j for j in joints if j > 1.0])
    c_bar = (first.value + second.value) / V

    grid = _uniform_grid(r_out, h)
    u_bar = c_bar + _cumulative(du_bar, grid, joints)
    psi = -_cumulative(Hb, grid, joints)
    u = u_bar + alpha * psi
    rms, worst = _residual(M, grid, u, source, r_lo, joints)

    diag = {
        "alpha_avg": alpha,
        "bump_constant": bump.params["constant"],
        "volume": V,
        "flux_mismatch": mismatch,
        "residual_max": worst,
        "r_out": float(r_out),
        "grid_step": float(grid[1] - grid[0]),
    }
    if cross_check:
        G = parabolic_green(M)
        top = M.r_max
        gf = integrate(lambda t: G(np.maximum(t, 1e-6)) * fbar(t) * omega * weight(t),
                       1e-6, top, tol=1e-300, rtol=1e-12, breakpoints=joints)
        diag["green_route_value_at_pole"] = gf.value
        diag["green_route_gap"] = abs(gf.value - c_bar)
    return RadialSolution(grid, u, rms, c_bar, diag)
