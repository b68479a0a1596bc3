"""Packaged numerical experiments with machine-readable pass/fail reports.

Every suite is a function of an integer ``resolution`` (1 = default grids).
:func:`run_suite` evaluates it at ``resolution`` and ``2 * resolution`` and
requires the outcome to agree.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import __version__
from .criterion import (
    DecayEnvelope,
    containment_check,
    containment_parameters,
    corollary1_check,
    corollary2_check,
    evaluate,
    series_terms,
)
from .errors import DomainError, PreconditionError
from .geometry import ModelManifold, curvature_scales, make_profile
from .green import (
    GreenProfile,
    dirichlet_green,
    flux_on_level,
    level_set,
    level_set_mass,
    minimal_green,
    parabolic_green,
    parabolic_residual,
    tail_l2,
)
from .kernels import scaled_green
from .numerics import SlopeFit, fit_line
from .poisson import RadialSource, potential_growth, solve_poisson, solve_poisson_finite_volume
from .spectral import (
    RadialDomain,
    SpectralSettings,
    barta_lower_bound,
    lambda1,
    lambda1_ess,
)

SCHEMA_VERSION = 1


def jsonable(obj):
    """Plain JSON types; non-finite floats become strings."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    if hasattr(obj, "to_dict"):
        return jsonable(obj.to_dict())
    return obj


def _fit_dict(fit: SlopeFit) -> dict:
    return {"slope": fit.slope, "intercept": fit.intercept, "residual_rms": fit.residual_rms,
            "points_used": fit.points_used}


def _model(family: str, n: int = 3, r_max: float = 60.0, **params) -> ModelManifold:
    return ModelManifold(n, make_profile(family, r_max=r_max, **params))


def _settings(resolution: int) -> SpectralSettings:
    base = SpectralSettings()
    return base if resolution == 1 else base.refined(resolution)


# ---------------------------------------------------------------- sharpness

@dataclass(frozen=True)
class SharpnessReport:
    gamma: float
    n: int
    alphas: tuple[float, ...]
    classifications: tuple[dict, ...]
    detected_threshold: float | None
    theoretical_threshold: float
    step: float
    monotone: bool

    @property
    def within_step(self) -> bool:
        return self.detected_threshold is not None and \
            abs(self.detected_threshold - self.theoretical_threshold) <= self.step * (1 + 1e-9)

    @property
    def passed(self) -> bool:
        return self.monotone and self.within_step

    def to_dict(self) -> dict:
        return {"gamma": self.gamma, "n": self.n, "step": self.step,
                "theoretical_threshold": self.theoretical_threshold,
                "detected_threshold": self.detected_threshold, "monotone": self.monotone,
                "within_step": self.within_step, "passed": self.passed,
                "classifications": list(self.classifications)}

    def to_rows(self) -> list[tuple]:
        return [(c["alpha"], c["status"], c["growth_exponent"], c["value_estimate"])
                for c in self.classifications]


def sharpness_model(gamma: float, n: int = 3, r_max: float = 400.0) -> ModelManifold:
    # gamma = 0 has no super-exponential weight; hyperbolic space stands in for it
    if gamma == 0:
        return _model("space_form", n, r_max)
    return _model("power_exp", n, r_max, gamma=gamma)


def sharpness_sweep(gamma: float, n: int = 3, alpha_min: float | None = None,
                    alpha_max: float | None = None, step: float = 0.05,
                    r_max: float = 400.0) -> SharpnessReport:
    """Classify ``u(p)`` for ``f = (1+r)^-alpha`` on a grid of ``alpha``.

    Points classified ``boundary`` are excluded from the monotonicity test.
    The detected threshold is the midpoint between the last divergent and
    the first finite ``alpha``.
    """
    if not gamma >= 0:
        raise PreconditionError("gamma must be non-negative")
    if not step > 0:
        raise PreconditionError("step must be positive")
    crit = 1.0 - gamma / 2.0
    lo = crit - 0.3 if alpha_min is None else float(alpha_min)
    hi = crit + 0.3 if alpha_max is None else float(alpha_max)
    if not lo < crit < hi:
        raise PreconditionError(f"alpha range [{lo}, {hi}] must straddle 1 - gamma/2 = {crit}")
    count = int(math.floor((hi - lo) / step + 1e-9))
    alphas = tuple(round(lo + k * step, 12) for k in range(count + 1))
    M = sharpness_model(gamma, n, r_max)
    rows = []
    for a in alphas:
        pg = potential_growth(M, RadialSource.power(a))
        rows.append({"alpha": a, "status": pg.status, "growth_exponent": pg.growth_exponent,
                     "value_estimate": pg.value_estimate})
    decided = [r for r in rows if r["status"] != "boundary"]
    labels = [r["status"] for r in decided]
    first_finite = next((i for i, s in enumerate(labels) if s == "finite"), len(labels))
    monotone = all(s == "divergent" for s in labels[:first_finite]) and \
        all(s == "finite" for s in labels[first_finite:])
    detected = None
    if 0 < first_finite < len(labels):
        detected = 0.5 * (decided[first_finite - 1]["alpha"] + decided[first_finite]["alpha"])
    return SharpnessReport(float(gamma), n, alphas, tuple(rows), detected, crit, step, monotone)


# ---------------------------------------------------------------- asymptotics

def tail_asymptotic_check(gamma: float, n: int = 3, window: tuple[float, float] = (2.0, 8.0),
                          points: int = 25, spread_tol: float = 0.02) -> dict:
    """Ratio of ``int_r^inf phi^{1-n}`` to ``r^{-gamma/2} exp(-(n-1) r^{1+gamma/2})``.

    The ratio is evaluated in log space on ``window``. It stabilizes when
    some right-anchored sub-window has relative spread below
    ``spread_tol`` and the spreads shrink as the window moves right. The
    limit is extrapolated linearly in ``r^{-(1+gamma/2)}``, the order of
    the first correction, and compared with ``1/((n-1)(1+gamma/2))``.
    For ``gamma = 0`` hyperbolic space is used, where ``sinh^{1-n}`` is
    replaced by ``2^{n-1} e^{-(n-1) r}`` and the limit is ``1/(n-1)``.
    """
    lo, hi = window
    r = np.linspace(lo, hi, points)
    if gamma == 0:
        M = _model("space_form", n, max(60.0, hi + 2))
        p = 1.0
        # sinh^{1-n} ~ 2^{n-1} e^{-(n-1) t}
        logq = np.array([math.log(scaled_green(M, x)) - (n - 1) * float(M.warping.log_phi(np.array([x]))[0])
                         + (n - 1) * x - (n - 1) * math.log(2.0) for x in r])
        expected = 1.0 / (n - 1)
    else:
        M = _model("power_exp", n, max(60.0, hi + 2), gamma=gamma)
        p = 1.0 + gamma / 2.0
        B = M.warping.B
        logq = np.array([math.log(scaled_green(M, x)) - (n - 1) * float(M.warping.log_phi(np.array([x]))[0])
                         + (gamma / 2.0) * math.log(x) + (n - 1) * B * x ** p for x in r])
        expected = 1.0 / ((n - 1) * B * p)
    q = np.exp(logq)
    spreads = []
    for k in range(points - 3):
        w = q[k:]
        spreads.append(float((w.max() - w.min()) / abs(w.mean())))
    stable_from = next((k for k, s in enumerate(spreads) if s < spread_tol), None)
    shrinking = bool(np.all(np.diff(spreads) <= 1e-12))
    fit = fit_line(r ** (-p), q)
    limit = fit.intercept
    rel = abs(limit - expected) / expected
    passed = stable_from is not None and shrinking and rel < spread_tol
    return {"gamma": gamma, "n": n, "window": list(window), "radii": r, "ratio": q,
            "window_spreads": spreads,
            "stable_window_start": None if stable_from is None else float(r[stable_from]),
            "spreads_shrinking": shrinking, "limit_estimate": limit, "expected_limit": expected,
            "relative_error": rel, "fit": _fit_dict(fit), "passed": passed}


def donnelly_check(M: ModelManifold, radii=None, G: GreenProfile | None = None,
                   ess_fraction: float = 0.8, slack: float = 0.05,
                   settings: SpectralSettings | None = None) -> dict:
    """Exponential decay rate of ``int_{M \\ B_R} G^2`` against the spectral gap.

    Fits ``log tail_l2(R) = a + s R`` and requires ``s <= -2 sqrt(0.8 lambda_ess) + slack``.
    """
    ess = lambda1_ess(M, settings=settings)
    if ess.gap_vanishes:
        return {"skipped": True, "reason": "lambda_1^ess = 0, hypothesis void",
                "lambda_ess": ess.value, "passed": True}
    if G is None:
        try:
            G = minimal_green(M)
        except PreconditionError:
            G = parabolic_green(M)
    radii = np.asarray(radii if radii is not None else np.arange(5.0, 31.0, 5.0), dtype=float)
    tails = [tail_l2(M, G, R) for R in radii]
    vals = np.array([t.value for t in tails])
    fit = fit_line(radii, np.log(vals))
    bound = -2.0 * math.sqrt(ess_fraction * ess.value) + slack
    return {"skipped": False, "kind": G.kind, "lambda_ess": ess.value, "radii": radii,
            "tail_l2": vals, "fit": _fit_dict(fit), "bound": bound,
            "passed": bool(fit.slope <= bound)}


def levelset_bound_check(M: ModelManifold, G: GreenProfile | None = None,
                         k_max: int = 10, decades: int = 4,
                         settings: SpectralSettings | None = None) -> dict:
    """``lambda_1(L(d e/2, 2e)) * mass(L(d e, e)) / (1 - log d)`` over a sweep.

    ``d = 2^-k`` for ``k = 1..k_max`` and ``e = G(1) 10^j`` for ``j`` over
    ``decades`` decades upward from ``G(1)``.
    """
    G = G or minimal_green(M)
    g1 = float(G(1.0)[0])
    rows = []
    for j in range(decades):
        eps = g1 * 10.0 ** j
        for k in range(1, k_max + 1):
            delta = 2.0 ** (-k)
            outer = level_set(G, delta * eps / 2.0, 2.0 * eps)
            inner = level_set(G, delta * eps, eps)
            lam = lambda1(M, RadialDomain.annulus(outer.inner_radius, outer.outer_radius),
                          settings).value
            mass = level_set_mass(M, G, inner)
            ratio = lam * mass / (1.0 - math.log(delta))
            rows.append({"epsilon": eps, "delta": delta, "lambda1": lam, "mass": mass,
                         "ratio": ratio, "annulus": [outer.inner_radius, outer.outer_radius]})
    worst = max(rows, key=lambda r: r["ratio"])
    return {"rows": rows, "max_ratio": worst["ratio"], "argmax": [worst["epsilon"], worst["delta"]],
            "bounded": bool(math.isfinite(worst["ratio"]))}


def exponential_lower_check(M: ModelManifold, C0: float | None = None, *, C0_factor: float = 1.0,
                            G: GreenProfile | None = None, points: int = 200) -> dict:
    """``G(r) >= G(1) exp(-C0 sqrt(K(r+1)) r)`` on ``[1, r_max - 1]``, compared in logs."""
    G = G or minimal_green(M)
    if C0 is None:
        _, C0, _ = containment_parameters(M, G)
    C0 *= C0_factor
    r = np.linspace(1.0, M.r_max - 1.0, points)
    K = np.array([c.K for c in curvature_scales(M, r + 1.0)])
    lhs = G.log_value(r)
    rhs = float(G.log_value(1.0)[0]) - C0 * np.sqrt(K) * r
    ok = lhs >= rhs
    fail = np.flatnonzero(~ok)
    return {"C0": C0, "points": points, "passed": bool(ok.all()),
            "failures": int(fail.size),
            "first_failure": None if fail.size == 0 else float(r[fail[0]]),
            "min_log_margin": float(np.min(lhs - rhs))}


# ---------------------------------------------------------------- suites

def _check(name: str, ok: bool, /, **details) -> dict:
    details.pop("passed", None)
    return {"check": name, "passed": bool(ok), **details}


def suite_green_oracle(resolution: int) -> list[dict]:
    r = np.geomspace(0.05, 20.0, 50 * resolution)
    out = []
    E = minimal_green(_model("euclidean"))
    err_e = float(np.max(np.abs(E(r) * 4 * math.pi * r - 1.0)))
    out.append(_check("euclidean_closed_form", err_e < 1e-8, max_relative_error=err_e, radii=r.size))
    H = minimal_green(_model("space_form"))
    exact = 2.0 / np.expm1(2.0 * r) / (4 * math.pi)
    err_h = float(np.max(np.abs(H(r) / exact - 1.0)))
    out.append(_check("sinh_closed_form", err_h < 1e-8, max_relative_error=err_h, radii=r.size))
    return out


def suite_flux(resolution: int) -> list[dict]:
    out = []
    step = 0.005 / resolution
    for fam, params in (("euclidean", {}), ("space_form", {}), ("power_exp", {"gamma": 2.0})):
        M = _model(fam, **params)
        G = minimal_green(M)
        radii = np.geomspace(0.05, 6.0 if fam == "power_exp" else 20.0, 20)
        levels = G(radii)
        errs = [abs(flux_on_level(M, G, float(s), step) - 1.0) for s in levels]
        out.append(_check(f"flux_{fam}", max(errs) < 1e-6, levels=len(errs), max_error=max(errs),
                          fd_step=step))
    return out


def suite_poisson(resolution: int) -> list[dict]:
    out = []
    h = 0.01 / resolution
    for fam, src, exact in (("euclidean", RadialSource.expdecay(1.0), 1.0),
                            ("space_form", RadialSource.expdecay(2.0), 0.125)):
        sol = solve_poisson(_model(fam), src, h=h)
        rel = abs(sol.value_at_pole - exact) / exact
        out.append(_check(f"poisson_{fam}", rel < 1e-7 and sol.residual_rms < 1e-6,
                          value_at_pole=sol.value_at_pole, exact=exact, relative_error=rel,
                          residual_rms=sol.residual_rms, grid_step=h))
    cusp = _model("cusp")
    sol = solve_poisson_finite_volume(cusp, RadialSource.expdecay(1.0), h=0.005 / resolution)
    out.append(_check("poisson_finite_volume_cusp", sol.residual_rms < 1e-6,
                      value_at_pole=sol.value_at_pole, residual_rms=sol.residual_rms,
                      green_route_gap=sol.diagnostics.get("green_route_gap")))
    return out


def suite_spectrum(resolution: int) -> list[dict]:
    s = _settings(resolution)
    out = []
    H = _model("space_form", r_max=200.0)
    ess = lambda1_ess(H, settings=s)
    out.append(_check("sinh_essential_bottom", abs(ess.value - 1.0) <= 0.02, estimate=ess.value,
                      barta=barta_lower_bound(H, RadialDomain.exterior(1.0)),
                      rayleigh_upper=ess.estimate.rayleigh_upper))
    domains = [RadialDomain.exterior(1.0), RadialDomain.exterior(5.0), RadialDomain.annulus(1.0, 3.0),
               RadialDomain.annulus(0.5, 4.0), RadialDomain.whole()]
    rows = []
    ok = True
    for fam, params in (("euclidean", {}), ("space_form", {}), ("power_exp", {"gamma": 2.0})):
        M = _model(fam, **params)
        for D in domains:
            est = lambda1(M, D, s)
            good = est.barta_lower <= est.value * (1 + 1e-9) + 1e-12
            ok &= good
            rows.append({"family": fam, "domain": D.describe(), "barta": est.barta_lower,
                         "lambda1": est.value, "ok": good})
    out.append(_check("barta_below_discrete", ok, rows=rows))
    mono = []
    ok = True
    for fam, params in (("space_form", {}), ("power_exp", {"gamma": 2.0})):
        M = _model(fam, **params)
        vals = [lambda1(M, RadialDomain.exterior(R), s).value for R in (1.0, 2.0, 4.0, 8.0, 16.0)]
        inc = all(b >= a * (1 - 2 * s.convergence_tol) for a, b in zip(vals[:-1], vals[1:]))
        ok &= inc
        mono.append({"family": fam, "values": vals, "non_decreasing": inc})
    out.append(_check("exterior_monotone", ok, rows=mono))
    return out


def suite_exhaustion(resolution: int) -> list[dict]:
    out = []
    for fam, params, Rs in (("euclidean", {}, (2.0, 4.0, 8.0, 16.0)),
                            ("space_form", {}, (1.0, 2.0, 4.0, 8.0)),
                            ("power_exp", {"gamma": 2.0}, (1.0, 1.5, 2.0, 2.5))):
        M = _model(fam, **params)
        G = minimal_green(M)
        sups, tails, errs = [], [], []
        for R in Rs:
            GR = dirichlet_green(M, R)
            # G - G_R is constant on B_R; sample where both are comparable to it
            r = R * (1.0 - np.geomspace(0.5, 1e-3, 20 * resolution))
            sup = float(np.max(G(r) - GR(r)))
            tail = scaled_green(M, R) * math.exp(-float(M.log_weight(np.array([R]))[0])) \
                / M.sphere_area_const
            sups.append(sup)
            tails.append(tail)
            errs.append(abs(sup - tail) / tail)
        dec = all(b < a for a, b in zip(sups[:-1], sups[1:]))
        out.append(_check(f"exhaustion_{fam}", dec and max(errs) < 1e-8, radii=list(Rs),
                          sup_difference=sups, tail=tails, relative_error=max(errs)))
    return out


def suite_criterion(resolution: int) -> list[dict]:
    s = _settings(resolution)
    out = []
    for mode in ("numerical", "barta_certified"):
        rep = corollary1_check(2.0, 0.5, mode=mode, settings=s)
        ok = rep.verdict == "Converges" and abs(rep.fit.slope + 1.5) <= 0.1
        out.append(_check(f"corollary1_gamma2_{mode}", ok, slope=rep.fit.slope, verdict=rep.verdict))
        ctrl = corollary1_check(2.0, 0.0, mode=mode, settings=s)
        out.append(_check(f"corollary1_eps0_control_{mode}", ctrl.verdict != "Converges",
                          slope=ctrl.fit.slope, verdict=ctrl.verdict))
    rep = corollary1_check(0.0, 0.5, settings=s)
    out.append(_check("corollary1_gamma0", rep.verdict == "Converges", slope=rep.fit.slope,
                      verdict=rep.verdict))
    for args in ((3.0, 3.0, 0.5), (2.0, 1.0, 0.5), (0.0, 0.0, 0.5)):
        rep = corollary2_check(*args)
        out.append(_check("corollary2_" + "_".join(f"{a:g}" for a in args), rep.verdict == "Converges",
                          slope=rep.fit.slope, verdict=rep.verdict))
    H = _model("space_form", r_max=200.0)
    rep = evaluate(series_terms(H, DecayEnvelope.power(1.5), 2, 64, settings=s))
    out.append(_check("sinh_power_decay", rep.verdict == "Converges" and abs(rep.fit.slope + 1.5) <= 0.1,
                      slope=rep.fit.slope, verdict=rep.verdict))
    return out


def suite_sharpness(resolution: int) -> list[dict]:
    out = []
    for gamma in (2.0, 3.0):
        rep = sharpness_sweep(gamma, step=0.05 / resolution)
        out.append(_check(f"sharpness_gamma{gamma:g}", rep.passed,
                          detected=rep.detected_threshold, theoretical=rep.theoretical_threshold,
                          monotone=rep.monotone, points=len(rep.alphas)))
    M = sharpness_model(3.0)
    pg = potential_growth(M, RadialSource.power(0.0))
    out.append(_check("bounded_source_gamma3", pg.status == "finite",
                      growth_exponent=pg.growth_exponent, value_estimate=pg.value_estimate))
    return out


def suite_donnelly(resolution: int) -> list[dict]:
    s = _settings(resolution)
    out = []
    H = _model("space_form")
    rep = donnelly_check(H, np.linspace(2.0, 12.0, 6 * resolution), settings=s)
    ok = rep["passed"] and abs(rep["fit"]["slope"] + 2.0) <= 0.05
    out.append(_check("donnelly_sinh", ok, **rep))
    C = _model("cusp")
    rep = donnelly_check(C, np.linspace(5.0, 30.0, 6 * resolution), settings=s)
    out.append(_check("donnelly_cusp_parabolic", rep["passed"], **rep))
    rep = donnelly_check(_model("euclidean"), settings=s)
    out.append(_check("donnelly_euclidean_skipped", rep["skipped"], **rep))
    return out


def suite_parabolic(resolution: int) -> list[dict]:
    C = _model("cusp")
    P = parabolic_green(C)
    res = parabolic_residual(P, h=0.01 / resolution)
    mean = P.diagnostics["mean"]
    return [_check("parabolic_cusp", abs(mean) < 1e-8 and res < 1e-6, mean=mean, residual=res,
                   volume=P.volume, volume_direct=P.diagnostics["volume_direct"])]


def suite_containment(resolution: int) -> list[dict]:
    out = []
    for fam, params in (("euclidean", {}), ("space_form", {}), ("power_exp", {"gamma": 2.0})):
        M = _model(fam, **params)
        G = minimal_green(M)
        rep = containment_check(M, G=G)
        out.append(_check(f"containment_{fam}", rep.passed, A=rep.A, C0=rep.C0, levels=len(rep.rows)))
        low = exponential_lower_check(M, rep.C0, G=G, points=200 * resolution)
        out.append(_check(f"exponential_lower_{fam}", low["passed"], **low))
        if fam != "euclidean":
            ctrl = containment_check(M, C0_factor=0.1, G=G)
            out.append(_check(f"containment_control_{fam}", not ctrl.passed,
                              failures=sum(not r.passed for r in ctrl.rows)))
            lctrl = exponential_lower_check(M, rep.C0, C0_factor=0.1, G=G, points=200 * resolution)
            out.append(_check(f"exponential_lower_control_{fam}", not lctrl["passed"],
                              failures=lctrl["failures"]))
    return out


def suite_levelset(resolution: int) -> list[dict]:
    out = []
    s1, s2 = _settings(resolution), _settings(2 * resolution)
    for fam, r_max in (("euclidean", 4000.0), ("space_form", 60.0)):
        M = _model(fam, r_max=r_max)
        G = minimal_green(M)
        a = levelset_bound_check(M, G, settings=s1)
        b = levelset_bound_check(M, G, settings=s2)
        change = abs(b["max_ratio"] - a["max_ratio"]) / a["max_ratio"]
        out.append(_check(f"levelset_{fam}", a["bounded"] and change < 0.1,
                          max_ratio=a["max_ratio"], refined_max_ratio=b["max_ratio"],
                          relative_change=change, argmax=a["argmax"]))
    # closed form on R^3 at delta = 1/2, eps = G(1): annulus (1/2, 4), mass over (1, 2)
    M = _model("euclidean", r_max=4000.0)
    G = minimal_green(M)
    g1 = float(G(1.0)[0])
    outer = level_set(G, g1 / 4.0, 2.0 * g1)
    lam = lambda1(M, RadialDomain.annulus(outer.inner_radius, outer.outer_radius), s1).value
    mass = level_set_mass(M, G, level_set(G, g1 / 2.0, g1))
    lam_exact = (math.pi / 3.5) ** 2
    ok = abs(lam / lam_exact - 1) < 1e-4 and abs(mass - 1.5) < 1e-9
    out.append(_check("levelset_closed_form", ok, lambda1=lam, lambda1_exact=lam_exact,
                      mass=mass, mass_exact=1.5))
    return out


def suite_tail_asymptotic(resolution: int) -> list[dict]:
    out = []
    for gamma in (0.0, 2.0, 3.0):
        rep = tail_asymptotic_check(gamma, points=25 * resolution)
        out.append(_check(f"tail_asymptotic_gamma{gamma:g}", rep["passed"],
                          limit=rep["limit_estimate"], expected=rep["expected_limit"],
                          relative_error=rep["relative_error"],
                          stable_window_start=rep["stable_window_start"]))
    return out


SUITES: dict[str, Callable[[int], list[dict]]] = {
    "green_oracle": suite_green_oracle,
    "flux": suite_flux,
    "poisson": suite_poisson,
    "spectrum": suite_spectrum,
    "exhaustion": suite_exhaustion,
    "criterion": suite_criterion,
    "sharpness": suite_sharpness,
    "donnelly": suite_donnelly,
    "parabolic": suite_parabolic,
    "containment": suite_containment,
    "levelset": suite_levelset,
    "tail_asymptotic": suite_tail_asymptotic,
}


def run_suite(name: str, resolution: int = 1) -> dict:
    """Run a suite at ``resolution`` and ``2 * resolution``; outcomes must agree."""
    if name not in SUITES:
        raise PreconditionError(f"unknown suite {name!r}; choose from {sorted(SUITES)} or 'all'")
    base = SUITES[name](resolution)
    refined = SUITES[name](2 * resolution)
    base_outcome = [c["passed"] for c in base]
    refined_outcome = [c["passed"] for c in refined]
    stable = base_outcome == refined_outcome
    return {"suite": name, "passed": bool(all(base_outcome) and stable),
            "resolution_stable": stable, "checks": base,
            "refined": [{"check": c["check"], "passed": c["passed"]} for c in refined]}


def run(suite: str = "all", resolution: int = 1) -> dict:
    names = list(SUITES) if suite == "all" else [suite]
    results = [run_suite(n, resolution) for n in names]
    return jsonable({"schema_version": SCHEMA_VERSION, "tool_version": __version__,
                     "suite": suite, "passed": all(r["passed"] for r in results),
                     "suites": results})
