"""Model manifolds ``dr^2 + phi(r)^2 dtheta^2`` and their radial geometry.

Every profile works with ``L = log phi`` so that fast-growing warps such as
``exp(r^2)`` never overflow. ``log_ratio(t, s)`` returns ``L(s) - L(t)``
without cancellation when both radii are large.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy.interpolate import BPoly
from scipy.special import gammaln

from .errors import ClassificationInconclusiveError, DomainError, PreconditionError
from .numerics import TailEnvelope, integrate

SPLICE_START = 0.5
SPLICE_END = 1.0
DEFAULT_EPS0 = 0.1


def _arr(r):
    return np.asarray(r, dtype=float)


class WarpingProfile(ABC):
    """A warping function with ``phi(0) = 0``, ``phi'(0) = 1`` and ``phi > 0``."""

    family: str = ""

    def __init__(self, r_max: float):
        if not r_max > 0:
            raise PreconditionError("r_max must be positive")
        self.r_max = float(r_max)

    @abstractmethod
    def params(self) -> dict[str, Any]:
        ...

    @abstractmethod
    def log_phi(self, r):
        ...

    @abstractmethod
    def dlog(self, r):
        """``phi'/phi``."""

    @abstractmethod
    def ddratio(self, r):
        """``phi''/phi``."""

    def log_ratio(self, t, s):
        return self.log_phi(s) - self.log_phi(t)

    def log_step(self, t, d):
        """``L(t + d) - L(t)`` without forming ``t + d`` where that loses ``d``."""
        return self.log_ratio(t, _arr(t) + _arr(d))

    def ratio_envelope(self, t0: float, c: float) -> TailEnvelope | None:
        """Majorant of ``exp(c (L(t) - L(t0)))`` for ``t`` beyond its start.

        ``None`` means no closed-form decaying majorant is known.
        """
        return None

    def green_scale_envelope(self, n: int) -> TailEnvelope | None:
        """Majorant of ``phi^{n-1}(t) * int_t^inf phi^{1-n}`` for large ``t``."""
        return None

    @property
    def joints(self) -> tuple[float, ...]:
        """Radii where ``phi'''`` may jump; finite differences must not straddle them."""
        return ()

    def dlog_limit(self) -> float | None:
        """``lim phi'/phi`` as ``r -> inf``, when the family knows it."""
        return None

    def phi(self, r):
        r = _arr(r)
        with np.errstate(divide="ignore"):
            return np.where(r > 0, np.exp(self.log_phi(np.where(r > 0, r, 1.0))), 0.0)

    def dphi(self, r):
        r = _arr(r)
        safe = np.where(r > 0, r, 1.0)
        return np.where(r > 0, self.dlog(safe) * np.exp(self.log_phi(safe)), 1.0)

    def d2phi(self, r):
        r = _arr(r)
        safe = np.where(r > 0, r, 1.0)
        return np.where(r > 0, self.ddratio(safe) * np.exp(self.log_phi(safe)), self._d2phi_at_zero())

    def _d2phi_at_zero(self) -> float:
        return 0.0

    def describe(self) -> dict[str, Any]:
        return {"family": self.family, **self.params(), "r_max": self.r_max}

    def validate(self) -> None:
        grid = np.concatenate([np.geomspace(1e-6, 1.0, 400), np.linspace(1.0, self.r_max, 2000)])
        grid = grid[grid <= self.r_max]
        lp = self.log_phi(grid)
        if not np.all(np.isfinite(lp)):
            bad = grid[~np.isfinite(lp)][0]
            raise PreconditionError(f"warping function is not positive and finite at r={bad!r}")
        if abs(float(self.dlog(np.array([1e-7]))[0]) * 1e-7 - 1.0) > 1e-5:
            raise PreconditionError("warping function must satisfy phi'(0) = 1")


class EuclideanProfile(WarpingProfile):
    family = "euclidean"

    def params(self):
        return {}

    def log_phi(self, r):
        return np.log(_arr(r))

    def dlog(self, r):
        return 1.0 / _arr(r)

    def ddratio(self, r):
        return np.zeros_like(_arr(r))

    def log_ratio(self, t, s):
        t = _arr(t)
        return self.log_step(t, _arr(s) - t)

    def log_step(self, t, d):
        return np.log1p(_arr(d) / _arr(t))

    def ratio_envelope(self, t0, c):
        return TailEnvelope(float(t0), 1.0, exponent=-float(c), rate=0.0)

    def green_scale_envelope(self, n):
        if n < 3:
            return None
        return TailEnvelope(1.0, 1.0 / (n - 2), exponent=-1.0)

    def dlog_limit(self):
        return 0.0


class SpaceFormProfile(WarpingProfile):
    """Constant curvature ``k < 0``: ``phi = sinh(kappa r)/kappa``."""

    family = "space_form"

    def __init__(self, curvature: float = -1.0, r_max: float = 200.0):
        super().__init__(r_max)
        if not curvature < 0:
            raise PreconditionError("space_form curvature must be negative")
        self.curvature = float(curvature)
        self.kappa = math.sqrt(-self.curvature)

    def params(self):
        return {"curvature": self.curvature}

    def _log_one_minus(self, r):
        # log(1 - exp(-2 kappa r))
        return np.log(-np.expm1(-2.0 * self.kappa * _arr(r)))

    def log_phi(self, r):
        r = _arr(r)
        k = self.kappa
        return k * r - math.log(2.0 * k) + self._log_one_minus(r)

    def dlog(self, r):
        return self.kappa / np.tanh(self.kappa * _arr(r))

    def ddratio(self, r):
        return np.full_like(_arr(r), self.kappa ** 2)

    def log_ratio(self, t, s):
        t = _arr(t)
        s = _arr(s)
        return self.kappa * (s - t) + self._log_one_minus(s) - self._log_one_minus(t)

    def log_step(self, t, d):
        t = _arr(t)
        d = _arr(d)
        return self.kappa * d + self._log_one_minus(t + d) - self._log_one_minus(t)

    def ratio_envelope(self, t0, c):
        if c >= 0:
            return None
        return TailEnvelope(float(t0), 1.0, rate=-float(c) * self.kappa)

    def green_scale_envelope(self, n):
        return TailEnvelope(1.0, 1.0 / ((n - 1) * self.kappa))

    def dlog_limit(self):
        return self.kappa


class SplicedProfile(WarpingProfile):
    """``phi = r`` on ``[0, 1/2]``, a quintic Hermite blend on ``[1/2, 1]``,
    and a closed-form outer profile on ``[1, inf)``."""

    def __init__(self, r_max: float):
        super().__init__(r_max)
        a, b = SPLICE_START, SPLICE_END
        outer = np.exp(self._outer_log(np.array([b])))[0]
        d1 = self._outer_dlog(np.array([b]))[0]
        d2 = self._outer_ddratio(np.array([b]))[0]
        self._blend = BPoly.from_derivatives([a, b], [[a, 1.0, 0.0], [outer, outer * d1, outer * d2]])
        self._blend1 = self._blend.derivative(1)
        self._blend2 = self._blend.derivative(2)
        xs = np.linspace(a, b, 4001)
        if np.any(self._blend(xs) <= 0):
            raise PreconditionError("splice blend is not positive; adjust the outer profile")

    @abstractmethod
    def _outer_log(self, r):
        ...

    @abstractmethod
    def _outer_dlog(self, r):
        ...

    @abstractmethod
    def _outer_ddratio(self, r):
        ...

    def _outer_log_ratio(self, t, s):
        t = _arr(t)
        return self._outer_log_step(t, _arr(s) - t)

    def _outer_log_step(self, t, d):
        t = _arr(t)
        return self._outer_log(t + _arr(d)) - self._outer_log(t)

    def _pieces(self, r, inner, blend, outer):
        r = _arr(r)
        out = np.empty_like(r)
        m_in = r <= SPLICE_START
        m_out = r >= SPLICE_END
        m_bl = ~(m_in | m_out)
        if m_in.any():
            out[m_in] = inner(r[m_in])
        if m_bl.any():
            out[m_bl] = blend(r[m_bl])
        if m_out.any():
            out[m_out] = outer(r[m_out])
        return out

    def log_phi(self, r):
        with np.errstate(divide="ignore"):
            return self._pieces(r, np.log, lambda x: np.log(self._blend(x)), self._outer_log)

    def dlog(self, r):
        return self._pieces(r, lambda x: 1.0 / x, lambda x: self._blend1(x) / self._blend(x),
                            self._outer_dlog)

    def ddratio(self, r):
        return self._pieces(r, np.zeros_like, lambda x: self._blend2(x) / self._blend(x),
                            self._outer_ddratio)

    def log_ratio(self, t, s):
        t, s = np.broadcast_arrays(_arr(t), _arr(s))
        both = (t >= SPLICE_END) & (s >= SPLICE_END)
        out = np.empty(t.shape)
        if both.any():
            out[both] = self._outer_log_ratio(t[both], s[both])
        if (~both).any():
            out[~both] = self.log_phi(s[~both]) - self.log_phi(t[~both])
        return out

    def log_step(self, t, d):
        t, d = np.broadcast_arrays(_arr(t), _arr(d))
        out = np.empty(t.shape)
        far = t >= SPLICE_END
        if far.any():
            out[far] = self._outer_log_step(t[far], d[far])
        if (~far).any():
            out[~far] = self.log_ratio(t[~far], t[~far] + d[~far])
        return out

    @property
    def joints(self):
        return (SPLICE_START, SPLICE_END)

    def joint_jumps(self) -> list[float]:
        """Relative jumps of ``phi, phi', phi''`` across both joints."""
        a, b = SPLICE_START, SPLICE_END
        left_a = [a, 1.0, 0.0]
        right_a = [float(self._blend(a)), float(self._blend1(a)), float(self._blend2(a))]
        left_b = [float(self._blend(b)), float(self._blend1(b)), float(self._blend2(b))]
        ob = math.exp(float(self._outer_log(np.array([b]))[0]))
        right_b = [ob, ob * float(self._outer_dlog(np.array([b]))[0]),
                   ob * float(self._outer_ddratio(np.array([b]))[0])]
        jumps = []
        for lhs, rhs in ((left_a, right_a), (left_b, right_b)):
            for x, y in zip(lhs, rhs):
                jumps.append(abs(x - y) / max(1.0, abs(x), abs(y)))
        return jumps

    def validate(self):
        super().validate()
        worst = max(self.joint_jumps())
        if worst > 1e-9:
            raise PreconditionError(f"splice is not C^2 (relative jump {worst:.3g})")


class PowerExpProfile(SplicedProfile):
    """Outer profile ``exp(B r^{1 + gamma/2})``."""

    family = "power_exp"

    def __init__(self, gamma: float = 2.0, B: float = 1.0, r_max: float = 200.0):
        if not gamma >= 0:
            raise PreconditionError("power_exp needs gamma >= 0")
        if not B > 0:
            raise PreconditionError("power_exp needs B > 0")
        self.gamma = float(gamma)
        self.B = float(B)
        self.p = 1.0 + self.gamma / 2.0
        super().__init__(r_max)

    def params(self):
        return {"gamma": self.gamma, "B": self.B}

    def _outer_log(self, r):
        return self.B * _arr(r) ** self.p

    def _outer_dlog(self, r):
        return self.B * self.p * _arr(r) ** (self.p - 1.0)

    def _outer_ddratio(self, r):
        r = _arr(r)
        d = self.B * self.p * r ** (self.p - 1.0)
        return d * d + self.B * self.p * (self.p - 1.0) * r ** (self.p - 2.0)

    def _outer_log_step(self, t, d):
        t = _arr(t)
        return self.B * t ** self.p * np.expm1(self.p * np.log1p(_arr(d) / t))

    def ratio_envelope(self, t0, c):
        if c >= 0:
            return None
        start = max(float(t0), SPLICE_END)
        value = math.exp(c * float(self.log_ratio(np.array([t0]), np.array([start]))[0]))
        rate = -c * float(self._outer_dlog(np.array([start]))[0])
        return TailEnvelope(start, value, rate=rate)

    def green_scale_envelope(self, n):
        return TailEnvelope(SPLICE_END, 1.0 / ((n - 1) * self.B * self.p), exponent=self.p - 1.0)

    def dlog_limit(self):
        return math.inf if self.gamma > 0 else self.B


class CuspProfile(SplicedProfile):
    """Outer profile ``r exp(-r)``: finite volume, one cusp-like end."""

    family = "cusp"

    def __init__(self, r_max: float = 200.0):
        super().__init__(r_max)

    def params(self):
        return {}

    def _outer_log(self, r):
        r = _arr(r)
        return np.log(r) - r

    def _outer_dlog(self, r):
        return 1.0 / _arr(r) - 1.0

    def _outer_ddratio(self, r):
        return 1.0 - 2.0 / _arr(r)

    def _outer_log_step(self, t, d):
        d = _arr(d)
        return np.log1p(d / _arr(t)) - d

    def ratio_envelope(self, t0, c):
        if c <= 0:
            return None
        start = max(float(t0), 2.0)
        value = math.exp(c * float(self.log_ratio(np.array([t0]), np.array([start]))[0]))
        return TailEnvelope(start, value, rate=c * (1.0 - 1.0 / start))

    def dlog_limit(self):
        return -1.0


class CustomProfile(WarpingProfile):
    """Sampled ``(phi, phi', phi'')`` joined by piecewise quintic Hermite polynomials."""

    family = "custom"

    def __init__(self, r, phi, dphi, d2phi):
        r = np.asarray(r, dtype=float)
        phi = np.asarray(phi, dtype=float)
        dphi = np.asarray(dphi, dtype=float)
        d2phi = np.asarray(d2phi, dtype=float)
        if r.ndim != 1 or r.size < 4 or not (phi.shape == dphi.shape == d2phi.shape == r.shape):
            raise PreconditionError("custom profile needs at least 4 samples of r, phi, phi', phi''")
        if r[0] != 0.0 or np.any(np.diff(r) <= 0):
            raise PreconditionError("custom grid must start at 0 and increase strictly")
        if abs(phi[0]) > 1e-12 or abs(dphi[0] - 1.0) > 1e-9:
            raise PreconditionError("custom profile must have phi(0) = 0 and phi'(0) = 1")
        if np.any(phi[1:] <= 0):
            raise PreconditionError("custom profile must be positive away from the pole")
        super().__init__(float(r[-1]))
        self._r = r
        self._samples = (phi, dphi, d2phi)
        self._poly = BPoly.from_derivatives(r, np.column_stack([phi, dphi, d2phi]))
        self._poly1 = self._poly.derivative(1)
        self._poly2 = self._poly.derivative(2)
        self._d2_zero = float(d2phi[0])

    def params(self):
        return {"samples": int(self._r.size)}

    @property
    def joints(self):
        return tuple(float(x) for x in self._r[1:-1])

    def _check(self, r):
        r = _arr(r)
        if np.any(r > self.r_max * (1 + 1e-12)):
            raise DomainError(f"custom profile is only defined up to r_max={self.r_max!r}")
        return r

    def log_phi(self, r):
        r = self._check(r)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.log(self._poly(r))

    def dlog(self, r):
        r = self._check(r)
        return self._poly1(r) / self._poly(r)

    def ddratio(self, r):
        r = self._check(r)
        return self._poly2(r) / self._poly(r)

    def _d2phi_at_zero(self):
        return self._d2_zero


def make_profile(family: str, r_max: float = 200.0, **params) -> WarpingProfile:
    if family == "euclidean":
        return EuclideanProfile(r_max)
    if family == "space_form":
        return SpaceFormProfile(params.get("curvature", -1.0), r_max)
    if family == "power_exp":
        return PowerExpProfile(params.get("gamma", 2.0), params.get("B", 1.0), r_max)
    if family == "cusp":
        return CuspProfile(r_max)
    raise PreconditionError(f"unknown warping family {family!r}")


def sphere_area(n: int) -> float:
    """Area of the unit ``(n-1)``-sphere in ``R^n``."""
    return math.exp(math.log(2.0) + 0.5 * n * math.log(math.pi) - gammaln(0.5 * n))


@dataclass(frozen=True)
class ModelManifold:
    n: int
    warping: WarpingProfile
    eps0: float = DEFAULT_EPS0
    sphere_area_const: float = field(init=False)

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise PreconditionError("dimension must be an integer >= 2")
        if not 0 < self.eps0 < 1:
            raise PreconditionError("eps0 must lie in (0, 1)")
        if 4 * self.eps0 > self.warping.r_max:
            raise PreconditionError("r_max must exceed 4 eps0")
        self.warping.validate()
        probe = np.linspace(self.eps0 * 1e-3, 4 * self.eps0, 400)
        if np.any(self.warping.dlog(probe) <= 0):
            raise PreconditionError("phi' must be positive on (0, 4 eps0]")
        object.__setattr__(self, "sphere_area_const", sphere_area(self.n))

    @property
    def r_max(self) -> float:
        return self.warping.r_max

    def log_weight(self, r):
        """``log phi^{n-1}``."""
        return (self.n - 1) * self.warping.log_phi(r)

    def weight_log_ratio(self, t, s):
        """``log(phi(s)^{n-1} / phi(t)^{n-1})``."""
        return (self.n - 1) * self.warping.log_ratio(t, s)

    def describe(self) -> dict[str, Any]:
        return {"dimension": self.n, **self.warping.describe(), "eps0": self.eps0}


def _check_radius(M: ModelManifold, r, lower_open: float = 0.0):
    r = _arr(r)
    if np.any(r <= lower_open) or np.any(r > M.r_max):
        raise DomainError(f"radius must lie in ({lower_open}, {M.r_max}]")
    return r


def ricci_radial(M: ModelManifold, r):
    """Ricci curvature in the radial direction, ``-(n-1) phi''/phi``."""
    r = _check_radius(M, r)
    return -(M.n - 1) * M.warping.ddratio(r)


def mean_curvature(M: ModelManifold, r):
    """Laplacian of the distance to the pole, ``(n-1) phi'/phi``."""
    r = _check_radius(M, r)
    return (M.n - 1) * M.warping.dlog(r)


@dataclass(frozen=True)
class CurvatureScale:
    R: float
    K_tilde: float
    K_hat: float
    K: float
    theta: float


def _shell_suprema(M: ModelManifold, radii: np.ndarray, cells: int):
    top = float(radii.max())
    grid = np.union1d(np.linspace(M.eps0, top, cells + 1), radii)
    kt = np.maximum.accumulate(M.warping.ddratio(grid))
    kh = np.maximum.accumulate(M.warping.dlog(grid))
    idx = np.searchsorted(grid, radii)
    return kt[idx], kh[idx]


def curvature_scales(M: ModelManifold, radii, rtol: float = 1e-6,
                     max_cells: int = 1 << 22) -> list[CurvatureScale]:
    """``K(R)`` and ``theta(R) = R sqrt(K(R))`` for several ``R`` at once.

    Shell suprema of ``phi''/phi`` and ``phi'/phi`` over ``[eps0, R]`` are
    taken on a grid that is doubled until every supremum is stable to
    ``rtol``.
    """
    radii = np.atleast_1d(_arr(radii))
    if np.any(radii <= M.eps0):
        raise DomainError(f"R must exceed eps0={M.eps0}")
    if np.any(radii > M.r_max):
        raise DomainError(f"R must not exceed r_max={M.r_max}")
    cells = 1024
    kt, kh = _shell_suprema(M, radii, cells)
    while True:
        cells *= 2
        kt2, kh2 = _shell_suprema(M, radii, cells)
        stable = (np.all(np.abs(kt2 - kt) <= rtol * np.maximum(1.0, np.abs(kt2)))
                  and np.all(np.abs(kh2 - kh) <= rtol * np.maximum(1.0, np.abs(kh2))))
        kt, kh = kt2, kh2
        if stable or cells >= max_cells:
            break
    K = np.maximum(1.0, np.maximum(kt, kh))
    theta = radii * np.sqrt(K)
    return [CurvatureScale(float(R), float(a), float(b), float(k), float(t))
            for R, a, b, k, t in zip(radii, kt, kh, K, theta)]


def curvature_scale(M: ModelManifold, R: float) -> CurvatureScale:
    return curvature_scales(M, [R])[0]


def theta(M: ModelManifold, radii) -> np.ndarray:
    return np.array([c.theta for c in curvature_scales(M, radii)])


def log_volume_ball(M: ModelManifold, R: float, rtol: float = 1e-12) -> float:
    """``log Vol(B_R)``, computed with the weight rescaled by its maximum."""
    R = float(_check_radius(M, R))
    probe = np.linspace(R / 4096, R, 4097)
    ref = float(np.max(M.log_weight(probe)))
    res = integrate(lambda t: np.exp(M.log_weight(t) - ref), 0.0, R, tol=1e-300, rtol=rtol)
    return math.log(M.sphere_area_const) + ref + math.log(res.value)


def volume_ball(M: ModelManifold, R: float, rtol: float = 1e-12) -> float:
    return math.exp(log_volume_ball(M, R, rtol))


@dataclass(frozen=True)
class RadialIntegralTest:
    """Outcome of a convergence test for ``int_1^inf phi^c``."""

    converges: bool
    certified: bool
    increment_ratios: tuple[float, ...] = ()


def _log_piece(M: ModelManifold, c: float, lo: float, hi: float) -> float:
    probe = np.linspace(lo, hi, 257)
    ref = float(np.max(c * M.warping.log_phi(probe)))
    res = integrate(lambda t: np.exp(c * M.warping.log_phi(t) - ref), lo, hi, tol=1e-300, rtol=1e-10)
    return ref + math.log(res.value)


def radial_integral_test(M: ModelManifold, c: float, name: str) -> RadialIntegralTest:
    """Decide whether ``int_1^inf phi(t)^c dt`` is finite.

    A decaying closed-form majorant settles the question with a certificate.
    Otherwise increments over doubling radii up to ``r_max`` are compared:
    ratios near or above 1 mean divergence, ratios well below 1 mean
    convergence, anything in between is inconclusive.
    """
    env = M.warping.ratio_envelope(1.0, c)
    if env is not None and env.summable:
        return RadialIntegralTest(True, True)
    edges = [1.0]
    while edges[-1] * 2 <= M.r_max:
        edges.append(edges[-1] * 2)
    if len(edges) < 4:
        raise ClassificationInconclusiveError("r_max too small for a growth test", name)
    logs = [_log_piece(M, c, a, b) for a, b in zip(edges[:-1], edges[1:])]
    ratios = tuple(math.exp(min(b - a, 700.0)) for a, b in zip(logs[:-1], logs[1:]))
    last = ratios[-2:]
    if all(q >= 0.99 for q in last):
        return RadialIntegralTest(False, False, ratios)
    if all(q <= 0.9 for q in last):
        return RadialIntegralTest(True, False, ratios)
    raise ClassificationInconclusiveError("growth of partial integrals is undecided", name)


@dataclass(frozen=True)
class Classification:
    non_parabolic: bool
    finite_volume: bool
    green_test: RadialIntegralTest
    volume_test: RadialIntegralTest

    @property
    def labels(self) -> tuple[str, str]:
        return ("non_parabolic" if self.non_parabolic else "parabolic",
                "finite_volume" if self.finite_volume else "infinite_volume")


def classify(M: ModelManifold) -> Classification:
    g = radial_integral_test(M, -(M.n - 1), f"int_1^inf phi^(1-n) for n={M.n}")
    v = radial_integral_test(M, M.n - 1, f"int_1^inf phi^(n-1) for n={M.n}")
    return Classification(g.converges, v.converges, g, v)
