"""Radial integral transforms with exponential weights.

Two families of integrals recur throughout the Green and Poisson code:

    forward   F(r) = int_0^r   g(t) exp(c (L(t) - L(r))) dt
    backward  S(r) = int_r^inf g(t) exp(c (L(t) - L(r))) dt

with ``L = log phi``. Tabulating them on a grid uses the one-step recurrences

    F(r_{i+1}) = exp(c (L(r_i) - L(r_{i+1}))) F(r_i) + cell integral
    S(r_i)     = exp(c (L(r_{i+1}) - L(r_i))) S(r_{i+1}) + cell integral

whose multipliers never overflow, so even ``phi = exp(r^3)`` stays finite.
Cells are sized so that ``|c L'|`` times the width stays below one half.
"""

from __future__ import annotations

import math
from typing import Callable

import numpy as np

from .errors import BudgetExceededError, DomainError
from .geometry import ModelManifold
from .numerics import TailEnvelope, gauss_legendre, integrate

ArrayFn = Callable[[np.ndarray], np.ndarray]

POLE_EDGE = 1e-6
DEFAULT_MAX_CELLS = 400_000


def adapted_edges(M: ModelManifold, c: float, hi: float, *, max_width: float = 0.25,
                  max_cells: int = DEFAULT_MAX_CELLS, include_pole: bool = True) -> np.ndarray:
    """Cell edges on ``[0, hi]``: geometric near the pole, then width ``<= 0.5/|c L'|``."""
    probe = np.union1d(np.geomspace(POLE_EDGE, hi, 6000), np.linspace(POLE_EDGE, hi, 20000))
    rate = np.abs(c * M.warping.dlog(probe))
    width = np.minimum(np.minimum(0.15 * probe, max_width), 0.5 / np.maximum(rate, 1e-300))
    density = 1.0 / width
    counts = np.concatenate([[0.0], np.cumsum(0.5 * (density[1:] + density[:-1]) * np.diff(probe))])
    total = int(math.ceil(counts[-1])) + 1
    if total > max_cells:
        raise BudgetExceededError(f"radial table on [0, {hi:.4g}] needs {total} cells (budget {max_cells})")
    edges = np.interp(np.linspace(0.0, counts[-1], total + 1), counts, probe)
    edges[0], edges[-1] = POLE_EDGE, hi
    # cells must not straddle points where phi''' jumps
    edges = np.union1d(edges, [j for j in M.warping.joints if POLE_EDGE < j < hi])
    if include_pole:
        edges = np.concatenate([[0.0], edges])
    return edges


def _safe_ratio(M: ModelManifold, c: float, t, s):
    """``c (L(s) - L(t))`` with the convention ``L(0) = -inf``."""
    t = np.asarray(t, dtype=float)
    s = np.asarray(s, dtype=float)
    if c == 0:
        return np.zeros(np.broadcast(t, s).shape)
    with np.errstate(divide="ignore", invalid="ignore"):
        tt = np.where(t > 0, t, 1.0)
        ss = np.where(s > 0, s, 1.0)
        out = c * M.warping.log_ratio(tt, ss)
    out = np.where(t <= 0, np.sign(c) * np.inf, out)
    out = np.where((s <= 0) & (t > 0), -np.sign(c) * np.inf, out)
    out = np.where((s <= 0) & (t <= 0), 0.0, out)
    return out


class ForwardTransform:
    """``F(r) = int_0^r g(t) exp(c (L(t) - L(r))) dt`` for ``c >= 0``."""

    def __init__(self, M: ModelManifold, g: ArrayFn, c: float, edges: np.ndarray, q: int = 16):
        if c < 0:
            raise DomainError("forward transforms need c >= 0")
        self.M, self.g, self.c, self.q = M, g, float(c), q
        self.edges = np.asarray(edges, dtype=float)
        lo, hi = self.edges[:-1], self.edges[1:]
        cells = self._partial(lo, hi)
        fac = np.exp(_safe_ratio(M, self.c, hi, lo))
        values = np.empty(self.edges.size)
        values[0] = 0.0
        acc = 0.0
        for i in range(cells.size):
            acc = fac[i] * acc + cells[i]
            values[i + 1] = acc
        self.values = values

    def _partial(self, lo: np.ndarray, x: np.ndarray) -> np.ndarray:
        """``int_lo^x g(t) exp(c (L(t) - L(x))) dt`` elementwise."""
        nodes, w = gauss_legendre(self.q)
        width = x - lo
        t = lo[:, None] + width[:, None] * nodes[None, :]
        expo = _safe_ratio(self.M, self.c, x[:, None], t)
        y = np.asarray(self.g(t), dtype=float) * np.exp(expo)
        return width * (y @ w)

    def __call__(self, x) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if np.any(x < 0) or np.any(x > self.edges[-1] * (1 + 1e-14)):
            raise DomainError(f"forward table covers [0, {self.edges[-1]}]")
        idx = np.clip(np.searchsorted(self.edges, x, side="right") - 1, 0, self.edges.size - 2)
        lo = self.edges[idx]
        fac = np.exp(_safe_ratio(self.M, self.c, x, lo))
        out = fac * self.values[idx]
        inside = x > lo
        if inside.any():
            out[inside] += self._partial(lo[inside], x[inside])
        return out


class BackwardTransform:
    """``S(r) = int_r^inf g(t) exp(c (L(t) - L(r))) dt``.

    Beyond the table the value is seeded by adaptive quadrature against the
    supplied majorant of ``g``; with ``g_envelope=None`` the integrand is
    taken to vanish past the top edge.
    """

    def __init__(self, M: ModelManifold, g: ArrayFn, c: float, edges: np.ndarray,
                 g_envelope: TailEnvelope | None, q: int = 16, rtol: float = 1e-14):
        self.M, self.g, self.c, self.q = M, g, float(c), q
        self.g_envelope = g_envelope
        self.rtol = rtol
        self.edges = np.asarray(edges, dtype=float)
        top = float(self.edges[-1])
        seed = self.pointwise(top) if g_envelope is not None else 0.0
        lo, hi = self.edges[:-1], self.edges[1:]
        cells = self._partial(lo, hi)
        fac = np.exp(_safe_ratio(M, self.c, lo, hi))
        values = np.empty(self.edges.size)
        values[-1] = seed
        acc = seed
        for i in range(cells.size - 1, -1, -1):
            acc = fac[i] * acc + cells[i]
            values[i] = acc
        self.values = values

    def _partial(self, x: np.ndarray, hi: np.ndarray) -> np.ndarray:
        """``int_x^hi g(t) exp(c (L(t) - L(x))) dt`` elementwise."""
        nodes, w = gauss_legendre(self.q)
        width = hi - x
        t = x[:, None] + width[:, None] * nodes[None, :]
        expo = _safe_ratio(self.M, self.c, x[:, None], t)
        with np.errstate(invalid="ignore"):
            y = np.asarray(self.g(t), dtype=float) * np.exp(expo)
        y = np.where(np.isnan(y), 0.0, y)
        return width * (y @ w)

    def envelope_at(self, x: float) -> TailEnvelope | None:
        ratio = self.M.warping.ratio_envelope(x, self.c)
        if ratio is None or self.g_envelope is None:
            return None
        env = self.g_envelope.times(ratio) if self.g_envelope.start <= ratio.start \
            else ratio.times(self.g_envelope)
        return env if env.summable else None

    def pointwise(self, x: float) -> float:
        """Adaptive quadrature at a single radius; the reference evaluator."""
        x = float(x)
        env = self.envelope_at(x)
        if env is None:
            raise DomainError(f"no decaying majorant for the tail beyond r={x!r}")
        return backward_at(self.M, self.g, self.c, x, env, self.rtol)

    def __call__(self, x) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        top = self.edges[-1]
        out = np.empty_like(x)
        beyond = x > top
        for k in np.flatnonzero(beyond):
            out[k] = self.pointwise(x[k]) if self.g_envelope is not None else 0.0
        inside = ~beyond
        if inside.any():
            xi = x[inside]
            idx = np.clip(np.searchsorted(self.edges, xi, side="right") - 1, 0, self.edges.size - 2)
            hi = self.edges[idx + 1]
            fac = np.exp(_safe_ratio(self.M, self.c, xi, hi))
            vals = fac * self.values[idx + 1]
            part = xi < hi
            if part.any():
                vals[part] += self._partial(xi[part], hi[part])
            if self.c < 0:
                vals = np.where(xi <= 0, 0.0, vals)
            out[inside] = vals
        return out


def green_scale_table(M: ModelManifold, hi: float, max_cells: int = DEFAULT_MAX_CELLS) -> BackwardTransform:
    """``phi^{n-1}(r) int_r^inf phi^{1-n}`` tabulated on ``[0, hi]``."""
    c = -(M.n - 1)
    edges = adapted_edges(M, c, hi, max_cells=max_cells)
    return BackwardTransform(M, np.ones_like, c, edges, TailEnvelope(hi, 1.0))


def _offset_envelope(env: TailEnvelope, x: float) -> TailEnvelope:
    """Rewrite a majorant in ``t`` as one in ``d = t - x``."""
    if env.rate > 0 and env.exponent >= 0:
        d0 = max(env.start - x, 0.0)
        return TailEnvelope(max(d0, 1e-300), float(env.bound(x + d0)), 0.0, env.rate)
    # t = x + d lies in [d, 2d] once d >= x
    d1 = max(x, env.start - x)
    a = env.exponent
    value = env.value * (2.0 ** (-a) if a < 0 else 1.0) * (d1 / env.start) ** (-a) \
        * math.exp(-env.rate * (x + d1 - env.start))
    return TailEnvelope(d1, value, a, env.rate)


def backward_at(M: ModelManifold, g: ArrayFn, c: float, x: float, env: TailEnvelope,
                rtol: float = 1e-14) -> float:
    """``int_x^inf g(t) exp(c (L(t) - L(x))) dt`` with ``env`` majorizing the integrand.

    The integral is taken in the offset ``d = t - x`` so that the integrand
    keeps its resolution when it decays within one ulp of ``x``.
    """
    rate = abs(c * float(M.warping.dlog(np.array([x]))[0]))
    width = 1.0 / rate if rate > 0 else x
    breaks = [width * 2.0 ** k for k in range(-2, 8)]
    denv = _offset_envelope(env, x)
    scale = env.value / env.rate if env.rate > 0 else env.value * max(x, env.start)
    integrand = lambda d: g(x + d) * np.exp(c * M.warping.log_step(x, d))
    res = integrate(integrand, 0.0, math.inf, tol=1e-15 * max(scale, 1e-300), rtol=rtol,
                    envelope=denv, breakpoints=breaks)
    return res.value


def scaled_green(M: ModelManifold, r: float, rtol: float = 1e-14) -> float:
    """``phi^{n-1}(r) int_r^inf phi^{1-n}`` by adaptive quadrature at one radius."""
    r = float(r)
    if r <= 0:
        return 0.0
    env = M.warping.ratio_envelope(r, -(M.n - 1))
    if env is None or not env.summable:
        raise DomainError(f"no decaying majorant for phi^(1-n) beyond r={r!r}")
    return backward_at(M, np.ones_like, -(M.n - 1), r, env, rtol)
