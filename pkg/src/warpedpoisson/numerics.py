"""Quadrature, tridiagonal eigenproblems and log-log slope fits.

Integrands passed to :func:`integrate` and :func:`cell_integrals` must be
vectorized: they receive a 1-D (or 2-D) float array and return an array of
the same shape.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .errors import (
    BudgetExceededError,
    EvaluationError,
    InsufficientDataError,
    InvalidMassError,
    PreconditionError,
)

ArrayFn = Callable[[np.ndarray], np.ndarray]

# Gauss-Kronrod 15/7 abscissae and weights on [-1, 1] (non-negative half).
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
_KRONROD_W = np.concatenate([_WGK[:-1], _WGK[::-1]])
_GAUSS_W = np.zeros(15)
# Gauss nodes are the odd-indexed Kronrod nodes (1, 3, 5, centre, ...).
for _i, _w in zip((1, 3, 5, 7, 9, 11, 13), (_WG[0], _WG[1], _WG[2], _WG[3], _WG[2], _WG[1], _WG[0])):
    _GAUSS_W[_i] = _w


@dataclass(frozen=True)
class QuadratureResult:
    value: float
    error_estimate: float
    evaluations: int
    upper_limit: float | None = None


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    intercept: float
    residual_rms: float
    points_used: int


@dataclass(frozen=True)
class TailEnvelope:
    """Decreasing majorant ``value * (t/start)**(-exponent) * exp(-rate*(t-start))``.

    The caller guarantees ``|f(t)| <= bound(t)`` for ``t >= start``. Pure
    exponentials use ``exponent=0``; pure power laws use ``rate=0``.
    A negative ``exponent`` is allowed when ``rate > 0``.
    """

    start: float
    value: float
    exponent: float = 0.0
    rate: float = 0.0

    def __post_init__(self):
        if not self.start > 0 or not self.value >= 0:
            raise PreconditionError("envelope needs start > 0 and value >= 0")
        if self.rate < 0:
            raise PreconditionError("envelope rate must be non-negative")

    @property
    def summable(self) -> bool:
        return self.rate > 0 or self.exponent > 1

    def bound(self, t):
        t = np.asarray(t, dtype=float)
        return self.value * (t / self.start) ** (-self.exponent) * np.exp(-self.rate * (t - self.start))

    def tail(self, T: float) -> float:
        """Upper bound for the integral of the envelope over ``[T, inf)``."""
        T = max(float(T), self.start)
        b = float(self.bound(T))
        if b == 0.0:
            return 0.0
        if self.rate > 0:
            eff = self.rate + min(self.exponent, 0.0) / T
            return b / eff if eff > 0 else math.inf
        if self.exponent > 1:
            return b * T / (self.exponent - 1.0)
        return math.inf

    def times(self, other: "TailEnvelope") -> "TailEnvelope":
        start = max(self.start, other.start)
        value = float(self.bound(start) * other.bound(start))
        return TailEnvelope(start, value, self.exponent + other.exponent, self.rate + other.rate)

    def truncation_radius(self, eps: float, max_radius: float = 1e8) -> float:
        """Smallest-ish ``T >= start`` with ``tail(T) <= eps``."""
        if not self.summable:
            raise BudgetExceededError("envelope is not integrable", math.inf, math.inf)
        if self.tail(self.start) <= eps:
            return self.start
        width = 1.0 / self.rate if self.rate > 0 else self.start
        lo, hi = self.start, self.start + width
        while self.tail(hi) > eps:
            lo, hi = hi, self.start + 2.0 * (hi - self.start)
            if hi > max_radius:
                raise BudgetExceededError(
                    f"tail bound stays above {eps:.3g} up to radius {max_radius:.3g}",
                    math.nan, self.tail(max_radius))
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if self.tail(mid) <= eps:
                hi = mid
            else:
                lo = mid
            if hi - lo <= 1e-9 * hi:
                break
        return hi


def _sample(f: ArrayFn, x: np.ndarray) -> np.ndarray:
    y = np.asarray(f(x), dtype=float)
    if y.shape != x.shape:
        y = np.broadcast_to(y, x.shape)
    bad = ~np.isfinite(y)
    if bad.any():
        raise EvaluationError("non-finite integrand sample", float(x[bad][0]))
    return y


def _gk15(f: ArrayFn, lo: np.ndarray, hi: np.ndarray):
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    x = mid[:, None] + half[:, None] * _NODES[None, :]
    y = _sample(f, x.ravel()).reshape(x.shape)
    k = half * (y @ _KRONROD_W)
    g = half * (y @ _GAUSS_W)
    return k, np.abs(k - g)


def integrate(
    f: ArrayFn,
    a: float,
    b: float,
    tol: float = 1e-10,
    *,
    rtol: float = 0.0,
    envelope: TailEnvelope | None = None,
    breakpoints: Sequence[float] = (),
    max_evals: int = 200_000,
    max_radius: float = 1e8,
) -> QuadratureResult:
    """Globally adaptive Gauss-Kronrod 15/7 quadrature.

    For ``b = inf`` the ``envelope`` majorizes ``|f|`` beyond its start; the
    range is cut at the first radius whose envelope tail is below ``tol/2``
    and that tail is added to the error estimate.

    Raises:
        EvaluationError: the integrand produced a non-finite value.
        BudgetExceededError: ``max_evals`` was hit before the tolerance.
    """
    a = float(a)
    b = float(b)
    if not tol > 0:
        raise PreconditionError("tol must be positive")
    if not a < b:
        raise PreconditionError(f"need a < b, got a={a!r}, b={b!r}")

    tail_err = 0.0
    upper = b
    target = tol
    if math.isinf(b):
        if envelope is None:
            raise PreconditionError("an envelope is required on an infinite interval")
        if envelope.rate == 0.0:
            return _integrate_power_tail(f, a, tol, rtol, envelope, breakpoints, max_evals)
        upper = max(a, envelope.truncation_radius(tol / 2.0, max_radius))
        tail_err = envelope.tail(upper)
        target = tol - tail_err
        if upper <= a:
            return QuadratureResult(0.0, tail_err, 1, upper)

    edges = sorted({a, upper, *[float(p) for p in breakpoints if a < p < upper]})
    lo = np.array(edges[:-1])
    hi = np.array(edges[1:])
    vals, errs = _gk15(f, lo, hi)
    evals = 15 * len(lo)

    heap = []
    pieces = {}
    for i in range(len(lo)):
        pieces[i] = (vals[i], errs[i])
        heapq.heappush(heap, (-errs[i], i, lo[i], hi[i]))
    next_id = len(lo)
    total_err = float(errs.sum())
    total = float(vals.sum())

    while total_err > max(target, rtol * abs(total)):
        if evals >= max_evals:
            raise BudgetExceededError(
                "quadrature evaluation budget exhausted",
                math.fsum(v for v, _ in pieces.values()) + 0.0,
                total_err + tail_err)
        neg_err, pid, x0, x1 = heapq.heappop(heap)
        xm = 0.5 * (x0 + x1)
        if not (x0 < xm < x1):
            # interval cannot be split further in floating point
            if not heap:
                break
            continue
        v_old, e_old = pieces.pop(pid)
        v2, e2 = _gk15(f, np.array([x0, xm]), np.array([xm, x1]))
        evals += 30
        for k, (s, t) in enumerate(((x0, xm), (xm, x1))):
            pieces[next_id] = (v2[k], e2[k])
            heapq.heappush(heap, (-e2[k], next_id, s, t))
            next_id += 1
        total += float(v2.sum()) - v_old
        total_err += float(e2.sum()) - e_old
        if not heap:
            break

    value = math.fsum(v for v, _ in pieces.values())
    err = math.fsum(e for _, e in pieces.values()) + tail_err
    return QuadratureResult(value, err, evals, upper)


def _integrate_power_tail(f, a, tol, rtol, envelope, breakpoints, max_evals):
    """Algebraic tails: map ``[s, inf)`` onto ``(0, 1]`` with ``t = s/u``.

    An integrand bounded by ``t^{-p}`` with ``p > 1`` becomes ``O(u^{p-2})``,
    which is integrable at ``u = 0``; no truncation error is incurred.
    """
    if not envelope.summable:
        raise BudgetExceededError("power-law majorant is not integrable", math.inf, math.inf)
    s = max(a, envelope.start)
    head = QuadratureResult(0.0, 0.0, 0)
    if s > a:
        head = integrate(f, a, s, tol / 2.0, rtol=rtol, breakpoints=breakpoints, max_evals=max_evals)

    def mapped(u):
        return f(s / u) * s / (u * u)

    tail = integrate(mapped, 0.0, 1.0, tol / 2.0 if s > a else tol, rtol=rtol,
                     max_evals=max_evals)
    return QuadratureResult(head.value + tail.value, head.error_estimate + tail.error_estimate,
                            head.evaluations + tail.evaluations, math.inf)


@lru_cache(maxsize=32)
def gauss_legendre(q: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights mapped to [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(q)
    return 0.5 * (x + 1.0), 0.5 * w


def cell_integrals(f: ArrayFn, edges: np.ndarray, q: int = 12) -> np.ndarray:
    """Integral of ``f`` over each cell ``[edges[i], edges[i+1]]``."""
    edges = np.asarray(edges, dtype=float)
    x, w = gauss_legendre(q)
    width = np.diff(edges)
    pts = edges[:-1, None] + width[:, None] * x[None, :]
    y = _sample(f, pts.ravel()).reshape(pts.shape)
    return width * (y @ w)


def cumulative_integral(f: ArrayFn, edges: np.ndarray, q: int = 12) -> np.ndarray:
    """Running integral from ``edges[0]``, one value per edge."""
    cells = cell_integrals(f, edges, q)
    return np.concatenate([[0.0], np.cumsum(cells)])


def smallest_eigenpair(diag, offdiag, weight) -> tuple[float, np.ndarray]:
    """Smallest eigenpair of ``K v = lam W v`` with tridiagonal K and diagonal W.

    The pencil is reduced to a symmetric tridiagonal matrix by the scaling
    ``W^{-1/2}``; LAPACK bisection on Sturm counts (stebz) locates the
    eigenvalue and inverse iteration (stein) returns the vector. The vector is
    normalized to ``v^T W v = 1`` with its largest entry positive.
    """
    d = np.asarray(diag, dtype=float)
    e = np.asarray(offdiag, dtype=float)
    w = np.asarray(weight, dtype=float)
    if d.ndim != 1 or d.size < 2 or w.shape != d.shape or e.shape != (d.size - 1,):
        raise PreconditionError("need diag/weight of equal size >= 2 and offdiag one shorter")
    if not np.all(w > 0) or not np.all(np.isfinite(w)):
        raise InvalidMassError("mass matrix entries must be finite and positive")
    s = 1.0 / np.sqrt(w)
    lam, y = eigh_tridiagonal(d * s * s, e * s[:-1] * s[1:], select="i",
                              select_range=(0, 0), lapack_driver="stebz")
    y = y[:, 0]
    y /= np.linalg.norm(y)
    if y[np.argmax(np.abs(y))] < 0:
        y = -y
    return float(lam[0]), y * s


def rayleigh_quotient(diag, offdiag, weight, v) -> float:
    d = np.asarray(diag, dtype=float)
    e = np.asarray(offdiag, dtype=float)
    v = np.asarray(v, dtype=float)
    kv = d * v
    kv[:-1] += e * v[1:]
    kv[1:] += e * v[:-1]
    return float(v @ kv) / float(v @ (np.asarray(weight, dtype=float) * v))


def fit_log_slope(xs, ys) -> SlopeFit:
    """Ordinary least squares of ``log ys`` against ``log xs``."""
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if x.size < 4 or x.shape != y.shape:
        raise InsufficientDataError(f"need at least 4 paired points, got {x.size}")
    if np.any(x <= 0) or np.any(y <= 0):
        raise PreconditionError("log-log fit needs positive data")
    return fit_line(np.log(x), np.log(y))


def fit_line(x, y) -> SlopeFit:
    """Least-squares line through ``(x, y)``; used for log-linear fits too."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 4:
        raise InsufficientDataError(f"need at least 4 points, got {x.size}")
    design = np.column_stack([x, np.ones_like(x)])
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    resid = y - design @ coef
    return SlopeFit(float(coef[0]), float(coef[1]),
                    float(np.sqrt(np.mean(resid * resid))), int(x.size))


def central_derivatives(u: np.ndarray, h: float) -> tuple[np.ndarray, np.ndarray]:
    """Sixth-order central first and second differences on a uniform grid.

    Returned arrays cover ``u[3:-3]``.
    """
    u = np.asarray(u, dtype=float)
    c1 = np.array([-1.0, 9.0, -45.0, 0.0, 45.0, -9.0, 1.0]) / 60.0
    c2 = np.array([2.0, -27.0, 270.0, -490.0, 270.0, -27.0, 2.0]) / 180.0
    n = u.size - 6
    if n < 1:
        raise InsufficientDataError("need at least 7 samples for sixth-order differences")
    d1 = sum(c1[k] * u[k:k + n] for k in range(7)) / h
    d2 = sum(c2[k] * u[k:k + n] for k in range(7)) / (h * h)
    return d1, d2
