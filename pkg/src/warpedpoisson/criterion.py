"""Series criterion for solvability of ``-Delta u = f`` and its corollaries.

For a non-decreasing ``zeta`` with ``|f| <= 1/zeta(r)`` the sum

    sum_j (theta(j+1) - theta(j)) / (lambda_1(M \\ B_{j-1}) zeta(j-1))

controls existence of a Green potential. Finitely many terms cannot decide
``< inf``, so :func:`verdict` returns Converges, Diverges or Inconclusive
together with the evidence it used.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import (
    BudgetExceededError,
    CertificationUnavailableError,
    HypothesisViolatedError,
    InsufficientDataError,
    PreconditionError,
)
from .geometry import ModelManifold, curvature_scales, make_profile, theta
from .green import gradient_ratio_profile, minimal_green, radius_of_level
from .numerics import fit_log_slope
from .spectral import RadialDomain, SpectralSettings, barta_lower_bound, lambda1, lambda1_ess

MODES = ("numerical", "barta_certified")
EXP_BUDGET = 700.0


@dataclass(frozen=True, eq=False)
class DecayEnvelope:
    """Non-decreasing ``zeta > 0`` with ``|f| <= 1/zeta(r)``."""

    family: str
    params: dict
    evaluator: Callable[[np.ndarray], np.ndarray]

    def __call__(self, r) -> np.ndarray:
        return np.asarray(self.evaluator(np.asarray(r, dtype=float)), dtype=float)

    @classmethod
    def power(cls, alpha: float, scale: float = 1.0) -> "DecayEnvelope":
        """``(1 + r)^alpha / scale``."""
        a, s = float(alpha), float(scale)
        if not s > 0:
            raise PreconditionError("zeta scale must be positive")
        env = cls("power", {"alpha": a, "scale": s}, lambda r: (1.0 + r) ** a / s)
        env.validate()
        return env

    @classmethod
    def constant(cls, c: float = 1.0) -> "DecayEnvelope":
        c = float(c)
        env = cls("constant", {"c": c}, lambda r: np.full(np.shape(r), c))
        env.validate()
        return env

    @classmethod
    def custom(cls, fn: Callable, name: str = "custom") -> "DecayEnvelope":
        env = cls("custom", {"name": name}, fn)
        env.validate()
        return env

    def validate(self, r_max: float = 1e3) -> None:
        grid = np.linspace(0.0, r_max, 4001)
        z = self(grid)
        if not np.all(np.isfinite(z)) or np.any(z <= 0):
            raise PreconditionError("zeta must be positive and finite")
        if np.any(np.diff(z) < -1e-12 * np.abs(z[1:])):
            raise PreconditionError("zeta must be non-decreasing")

    def describe(self) -> dict:
        return {"family": self.family, **self.params}


@dataclass(frozen=True)
class SeriesTerm:
    j: int
    theta_increment: float
    lambda1: float
    zeta: float
    b: float

    def to_dict(self) -> dict:
        return {"j": self.j, "theta_increment": self.theta_increment, "lambda1": self.lambda1,
                "zeta": self.zeta, "b": self.b}


@dataclass(frozen=True)
class VerdictRules:
    margin: float = 0.1
    drift_tol: float = 0.15
    cauchy_tol: float = 0.1
    diverge_slack: float = 0.02


@dataclass(frozen=True, eq=False)
class CriterionReport:
    terms: tuple[SeriesTerm, ...]
    partial_sums: tuple[float, ...]
    fit: object
    lambda_mode: str
    frozen_lambda: bool
    manifold: dict
    zeta: dict
    verdict: str | None = None
    evidence: dict = field(default_factory=dict)

    @property
    def b(self) -> np.ndarray:
        return np.array([t.b for t in self.terms])

    @property
    def j(self) -> np.ndarray:
        return np.array([t.j for t in self.terms], dtype=float)

    def with_verdict(self, verdict_value: str, evidence: dict) -> "CriterionReport":
        return CriterionReport(self.terms, self.partial_sums, self.fit, self.lambda_mode,
                               self.frozen_lambda, self.manifold, self.zeta, verdict_value, evidence)

    def to_dict(self) -> dict:
        return {
            "manifold": self.manifold,
            "zeta": self.zeta,
            "lambda_mode": self.lambda_mode,
            "frozen_lambda": self.frozen_lambda,
            "fit": {"slope": self.fit.slope, "intercept": self.fit.intercept,
                    "residual_rms": self.fit.residual_rms, "points_used": self.fit.points_used},
            "verdict": self.verdict,
            "evidence": self.evidence,
            "terms": [t.to_dict() for t in self.terms],
            "partial_sums": list(self.partial_sums),
        }


def series_terms(M: ModelManifold, zeta: DecayEnvelope, j0: int = 2, J: int = 64,
                 mode: str = "numerical", *, freeze_lambda: bool = False,
                 lambda_profile: ModelManifold | None = None,
                 settings: SpectralSettings | None = None) -> CriterionReport:
    """Terms ``b_j`` for ``j0 <= j <= J``.

    ``mode='numerical'`` uses the discrete exterior eigenvalue,
    ``'barta_certified'`` its certified lower bound (computed on
    ``lambda_profile`` when given, a comparison model whose exterior
    eigenvalues lie below those of ``M``). With ``freeze_lambda`` every term
    uses the value at ``j0 - 1``, which is a lower bound for all later
    exteriors.

    Raises:
        CertificationUnavailableError: certified mode with a zero lower bound.
    """
    if mode not in MODES:
        raise PreconditionError(f"mode must be one of {MODES}")
    if j0 < 2:
        raise PreconditionError("j0 must be at least 2 so that B_{j-1} has positive radius")
    if J - j0 + 1 < 8:
        raise InsufficientDataError("need at least 8 terms")
    if J + 1 > M.r_max:
        raise PreconditionError(f"J + 1 = {J + 1} exceeds r_max = {M.r_max}")
    js = np.arange(j0, J + 1)
    th = theta(M, np.arange(j0, J + 2, dtype=float))
    dtheta = np.diff(th)
    lam_src = lambda_profile or M

    def lam(R: float) -> float:
        D = RadialDomain.exterior(R)
        if mode == "barta_certified":
            v = barta_lower_bound(lam_src, D)
            if v <= 0:
                raise CertificationUnavailableError(
                    "certified lower bound is 0 on this manifold; use mode='numerical'")
            return v
        return lambda1(lam_src, D, settings).value

    if freeze_lambda:
        lams = np.full(js.size, lam(float(j0 - 1)))
    else:
        lams = np.array([lam(float(j - 1)) for j in js])
    z = zeta(js - 1.0)
    b = dtheta / (lams * z)
    terms = tuple(SeriesTerm(int(j), float(d), float(l), float(zz), float(bb))
                  for j, d, l, zz, bb in zip(js, dtheta, lams, z, b))
    partial = tuple(float(s) for s in np.cumsum(b))
    fit = fit_log_slope(js, b)
    return CriterionReport(terms, partial, fit, mode, freeze_lambda, M.describe(), zeta.describe())


def verdict(report: CriterionReport, rules: VerdictRules | None = None) -> tuple[str, dict]:
    """Three-valued decision on ``sum b_j < inf`` from finitely many terms.

    Converges: the fitted exponent over all terms and over the second half
    are both below ``-(1 + margin)``, they agree to ``drift_tol``, and the
    last quarter adds at most ``cauchy_tol`` of the total; in certified mode
    it is also enough that ``j^(1+margin) b_j`` on the second half never
    exceeds its maximum on the first half.

    Diverges: the second-half exponent is at least ``-1 - diverge_slack``
    and sums over doubling blocks of ``j`` do not shrink faster than
    ``2^(-margin)``.
    """
    rules = rules or VerdictRules()
    j, b = report.j, report.b
    if j.size < 8:
        raise InsufficientDataError("verdict needs at least 8 terms")
    half = j.size // 2
    p_full = fit_log_slope(j, b).slope
    p_tail = fit_log_slope(j[half:], b[half:]).slope
    S = np.cumsum(b)
    q = int(math.floor(0.75 * (j.size - 1)))
    cauchy = float((S[-1] - S[q]) / S[-1])
    crit = -(1.0 + rules.margin)
    drift = abs(p_full - p_tail)

    weighted = j ** (1.0 + rules.margin) * b
    dominated = bool(np.max(weighted[half:]) <= np.max(weighted[:half]))

    # sums over blocks [2^k, 2^{k+1}) that lie inside the index range
    blocks = []
    k = int(math.ceil(math.log2(j[0])))
    while 2 ** (k + 1) - 1 <= j[-1]:
        mask = (j >= 2 ** k) & (j < 2 ** (k + 1))
        blocks.append(float(np.sum(b[mask])))
        k += 1
    block_ratio = blocks[-1] / blocks[-2] if len(blocks) >= 2 else math.nan

    evidence = {
        "p_full": p_full, "p_tail": p_tail, "drift": drift, "cauchy_ratio": cauchy,
        "tail_dominated": dominated, "block_sums": blocks, "block_ratio": block_ratio,
        "rules": {"margin": rules.margin, "drift_tol": rules.drift_tol,
                  "cauchy_tol": rules.cauchy_tol, "diverge_slack": rules.diverge_slack},
    }
    fit_ok = p_full < crit and p_tail < crit and drift <= rules.drift_tol and cauchy <= rules.cauchy_tol
    cert_ok = report.lambda_mode == "barta_certified" and dominated and p_tail < crit
    if fit_ok or cert_ok:
        evidence["reason"] = "fitted decay" if fit_ok else "certified domination"
        return "Converges", evidence
    if p_tail >= -1.0 - rules.diverge_slack and (math.isnan(block_ratio)
                                                  or block_ratio >= 2.0 ** (-rules.margin)):
        evidence["reason"] = "harmonic-or-slower decay with non-shrinking block sums"
        return "Diverges", evidence
    evidence["reason"] = "neither rule applies"
    return "Inconclusive", evidence


def evaluate(report: CriterionReport, rules: VerdictRules | None = None) -> CriterionReport:
    v, ev = verdict(report, rules)
    return report.with_verdict(v, ev)


def _family_for(gamma: float, n: int, r_max: float) -> ModelManifold:
    # gamma = 0 is the bounded-curvature case, realized by hyperbolic space
    if gamma == 0:
        return ModelManifold(n, make_profile("space_form", r_max=r_max))
    return ModelManifold(n, make_profile("power_exp", r_max=r_max, gamma=gamma))


def _essential_lower(M: ModelManifold) -> float:
    """Certified bound on the exterior of ``B_1`` if positive, else the ladder estimate (0 if it has no gap)."""
    b = barta_lower_bound(M, RadialDomain.exterior(1.0))
    if b > 0:
        return b
    ess = lambda1_ess(M)
    return 0.0 if ess.gap_vanishes else ess.value


def corollary1_check(gamma: float, eps: float, C: float = 1.0, *, J: int = 64, n: int = 3,
                     mode: str = "numerical",
                     settings: SpectralSettings | None = None) -> CriterionReport:
    """Polynomial Ricci lower bound with decay ``|f| <= C (1+r)^-(1+gamma/2+eps)``.

    The geometry is ``power_exp(gamma)`` (hyperbolic space for
    ``gamma = 0``). The corollary only uses ``lambda_1^ess > 0``, so the
    exterior eigenvalue is frozen at its value for ``B_{j0-1}``.

    Raises:
        HypothesisViolatedError: the essential spectrum reaches 0.
    """
    if gamma < 0 or not eps >= 0:
        raise PreconditionError("need gamma >= 0 and eps >= 0")
    M = _family_for(gamma, n, max(200.0, 2.0 * J + 50.0))
    ess = _essential_lower(M)
    if ess <= 0:
        raise HypothesisViolatedError(f"lambda_1^ess estimate {ess:.3g} is not positive")
    zeta = DecayEnvelope.power(1.0 + gamma / 2.0 + eps, C)
    rep = series_terms(M, zeta, 2, J, mode, freeze_lambda=True, settings=settings)
    rep = evaluate(rep)
    rep.evidence["lambda_ess_lower"] = ess
    rep.evidence["parameters"] = {"gamma": gamma, "eps": eps, "C": C}
    return rep


def corollary2_check(gamma1: float, gamma2: float, eps: float, *, J: int = 64,
                     n: int = 3) -> CriterionReport:
    """Two-sided polynomial Ricci bounds, ``zeta = (1+r)^(1+gamma1/2-gamma2+eps)``.

    Geometry ``power_exp(gamma1)``; exterior eigenvalues bounded below by the
    certified bound on the ``power_exp(gamma2)`` comparison model.
    """
    if not gamma1 >= gamma2 >= 0:
        raise PreconditionError("need gamma1 >= gamma2 >= 0")
    if not eps > 0:
        raise PreconditionError("need eps > 0")
    expo = 1.0 + gamma1 / 2.0 - gamma2 + eps
    if expo < 0:
        raise PreconditionError("need 1 + gamma1/2 - gamma2 + eps >= 0")
    r_max = max(200.0, 2.0 * J + 50.0)
    M = _family_for(gamma1, n, r_max)
    comparison = _family_for(gamma2, n, r_max)
    zeta = DecayEnvelope.constant(1.0) if expo == 0 else DecayEnvelope.power(expo)
    rep = series_terms(M, zeta, 2, J, "barta_certified", lambda_profile=comparison)
    rep = evaluate(rep)
    rep.evidence["parameters"] = {"gamma1": gamma1, "gamma2": gamma2, "eps": eps,
                                  "zeta_exponent": expo}
    return rep


@dataclass(frozen=True)
class ContainmentRow:
    m: int
    theta: float
    log_a: float
    radius: float
    required: float
    passed: bool

    def to_dict(self) -> dict:
        return {"m": self.m, "theta": self.theta, "log_a": self.log_a,
                "radius": self.radius, "required": self.required, "passed": self.passed}


@dataclass(frozen=True)
class ContainmentReport:
    A: float
    C0: float
    C_emp: float
    rows: tuple[ContainmentRow, ...]

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.rows)

    def to_dict(self) -> dict:
        return {"A": self.A, "C0": self.C0, "C_emp": self.C_emp, "passed": self.passed,
                "rows": [r.to_dict() for r in self.rows]}


def containment_parameters(M: ModelManifold, G=None) -> tuple[float, float, float]:
    """``A = max(G(1), 1/G(1))`` (nudged up) and ``C0 = 1.1 C_emp``."""
    G = G or minimal_green(M)
    g1 = float(G(1.0)[0])
    A = max(g1, 1.0 / g1) * (1.0 + 1e-12)
    c_emp = gradient_ratio_profile(M, G).sup
    return A, 1.1 * c_emp, c_emp


def containment_check(M: ModelManifold, *, C0_factor: float = 1.0, m_max: int | None = None,
                      G=None) -> ContainmentReport:
    """Check that ``{G < 2 a_m}`` lies outside ``B_{m-1}`` for every ``m`` in budget.

    ``a_m = exp(-C0 theta(m)) / (2A)``. ``m`` runs from 2 while
    ``C0 theta(m)`` stays below the exponent budget. A level radius beyond
    ``r_max`` counts as a pass because ``G`` is decreasing.

    Raises:
        BudgetExceededError: the budget is exhausted before ``m = 3``.
    """
    G = G or minimal_green(M)
    A, C0, c_emp = containment_parameters(M, G)
    C0 *= C0_factor
    top = int(math.floor(M.r_max)) if m_max is None else int(m_max)
    scales = curvature_scales(M, np.arange(2, top + 1, dtype=float))
    rows = []
    for cs in scales:
        m = int(round(cs.R))
        expo = C0 * cs.theta
        if expo > EXP_BUDGET:
            break
        log_a = -expo - math.log(2.0 * A)
        level = math.exp(-expo) / A
        if float(G(M.r_max)[0]) > level:
            r_m = math.inf
        else:
            r_m = radius_of_level(G, level)
        rows.append(ContainmentRow(m, cs.theta, log_a, r_m, m - 1.0, r_m >= m - 1.0))
    if len(rows) < 2:
        raise BudgetExceededError(f"a_m leaves the representable range before m = 3 (C0={C0:.4g})")
    return ContainmentReport(A, C0, c_emp, tuple(rows))
