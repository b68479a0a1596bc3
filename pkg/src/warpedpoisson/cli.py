"""Command-line front end.

Exit codes: 0 success, 1 precondition or configuration error, 2 numerical
error, 3 a verify suite failed.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys

import numpy as np

from . import __version__
from . import config as cfg
from .criterion import DecayEnvelope, evaluate, series_terms
from .errors import ConfigError, NumericalError, PreconditionError
from .geometry import classify, curvature_scales, volume_ball
from .green import dirichlet_green, minimal_green, parabolic_green
from .poisson import PotentialGrowth, solve_poisson, solve_poisson_finite_volume
from .spectral import RadialDomain, SpectralSettings, lambda1, lambda1_ess
from .verify import SCHEMA_VERSION, SUITES, jsonable, run, sharpness_sweep

EXIT_OK, EXIT_PRECONDITION, EXIT_NUMERICAL, EXIT_VERIFY = 0, 1, 2, 3

DEFAULT_MANIFOLD = {"family": "euclidean", "dimension": 3, "r_max": 200.0}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message, "argv")


def _manifold_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("manifold (overrides the config file)")
    g.add_argument("--family", choices=["euclidean", "space_form", "power_exp", "cusp"],
                   help="warping family (default: euclidean)")
    g.add_argument("--dimension", type=int, help="dimension n >= 2 (default: 3)")
    g.add_argument("--r-max", type=float, help="outer radius of the profile, geodesic units (default: 200)")
    g.add_argument("--gamma", type=float, help="power_exp exponent gamma >= 0 (default: 2)")
    g.add_argument("--B", type=float, help="power_exp amplitude B > 0 (default: 1)")
    g.add_argument("--curvature", type=float, help="space_form sectional curvature < 0 (default: -1)")


def _output_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file; command-line flags take precedence")
    p.add_argument("--json", dest="json_out", help="write the JSON report to this path")
    p.add_argument("--csv", dest="csv_out", help="write plot-ready CSV to this path")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="warpedpoisson", description=__doc__.splitlines()[0],
                formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    fmt = argparse.ArgumentDefaultsHelpFormatter

    m = sub.add_parser("manifold", help="describe and classify a model manifold", formatter_class=fmt)
    m.add_argument("action", choices=["info"], help="what to report")
    _manifold_args(m)
    _output_args(m)

    s = sub.add_parser("spectrum", help="bottom of the spectrum on a radial domain", formatter_class=fmt)
    dom = s.add_mutually_exclusive_group()
    dom.add_argument("--exterior", type=float, metavar="R", help="exterior of the ball of radius R")
    dom.add_argument("--ess", action="store_true", help="bottom of the essential spectrum")
    dom.add_argument("--annulus", type=float, nargs=2, metavar=("R1", "R2"), help="annulus R1 < r < R2")
    dom.add_argument("--whole", action="store_true", help="the whole manifold")
    s.add_argument("--h-fraction", type=float, help="grid step as a fraction of the domain length (default: 1e-3)")
    s.add_argument("--h-cap", type=float, help="cap on h times the mean curvature (default: 0.1)")
    _manifold_args(s)
    _output_args(s)

    g = sub.add_parser("green", help="radial Green's function", formatter_class=fmt)
    g.add_argument("--kind", choices=["minimal", "dirichlet", "parabolic"], help="(default: minimal)")
    g.add_argument("--R", type=float, help="Dirichlet radius, geodesic units")
    g.add_argument("--export", choices=["csv"], help="print the sampled profile as CSV on stdout")
    _manifold_args(g)
    _output_args(g)

    q = sub.add_parser("poisson", help="solve -Delta u = f for a radial source", formatter_class=fmt)
    q.add_argument("--source", nargs=2, metavar=("TYPE", "VALUE"),
                   help="'power ALPHA' for (1+r)^-ALPHA, 'expdecay C' for exp(-C r), "
                        "or 'file PATH' for a two-column r,f CSV (default: expdecay 1)")
    q.add_argument("--grid-step", type=float, help="uniform profile grid step (default: 0.01)")
    q.add_argument("--r-out", type=float, help="outer radius of the sampled profile")
    _manifold_args(q)
    _output_args(q)

    c = sub.add_parser("criterion", help="series criterion for a decay envelope", formatter_class=fmt)
    c.add_argument("--zeta", nargs=2, metavar=("TYPE", "VALUE"),
                   help="'power A' for (1+r)^A or 'constant C' (default: power 1.5)")
    c.add_argument("--jmax", type=int, help="last index J (default: 64)")
    c.add_argument("--j0", type=int, help="first index, at least 2 (default: 2)")
    c.add_argument("--mode", choices=["numerical", "barta"], help="eigenvalue source (default: numerical)")
    _manifold_args(c)
    _output_args(c)

    v = sub.add_parser("verify", help="run packaged checks", formatter_class=fmt)
    v.add_argument("--suite", help=f"one of {', '.join(SUITES)} or 'all' (default: all)")
    v.add_argument("--resolution", type=int, help="base grid resolution multiplier (default: 1)")
    _output_args(v)

    h = sub.add_parser("sharpness", help="sweep the source decay exponent on power_exp(gamma)",
                       formatter_class=fmt)
    h.add_argument("--gamma", type=float, help="curvature growth exponent (default: 2)")
    h.add_argument("--alpha-min", type=float, help="(default: 1 - gamma/2 - 0.3)")
    h.add_argument("--alpha-max", type=float, help="(default: 1 - gamma/2 + 0.3)")
    h.add_argument("--step", type=float, help="alpha step (default: 0.05)")
    h.add_argument("--dimension", type=int, help="(default: 3)")
    h.add_argument("--r-max", type=float, help="largest truncation radius (default: 400)")
    _output_args(h)
    return p


def _overrides(args: argparse.Namespace) -> dict:
    """Command-line values in config-file shape."""
    a = vars(args)
    cmd = args.command
    out: dict = {"output": {"json": a.get("json_out"), "csv": a.get("csv_out")}}
    if "family" in a:
        out["manifold"] = {"family": a["family"], "dimension": a["dimension"], "r_max": a["r_max"],
                           "params": {"gamma": a["gamma"], "B": a["B"], "curvature": a["curvature"]}}
    if cmd == "spectrum":
        dom = {"domain": None}
        if a["exterior"] is not None:
            dom = {"domain": "exterior", "R": a["exterior"]}
        elif a["ess"]:
            dom = {"domain": "ess"}
        elif a["annulus"] is not None:
            dom = {"domain": "annulus", "R": a["annulus"][0], "R2": a["annulus"][1]}
        elif a["whole"]:
            dom = {"domain": "whole"}
        out["spectrum"] = {**dom, "h_fraction": a["h_fraction"], "h_cap": a["h_cap"]}
    elif cmd == "green":
        out["green"] = {"kind": a["kind"], "R": a["R"]}
    elif cmd == "poisson":
        src = None
        if a["source"] is not None:
            kind, value = a["source"]
            src = {"type": kind}
            if kind == "file":
                src["path"] = value
            else:
                key = {"power": "alpha", "expdecay": "c"}.get(kind)
                if key is None:
                    raise ConfigError(f"unknown source type {kind!r}", "poisson.source.type")
                src[key] = _number(value, f"poisson.source.{key}")
        out["poisson"] = {"source": src, "grid_step": a["grid_step"], "r_out": a["r_out"]}
    elif cmd == "criterion":
        zeta = None
        if a["zeta"] is not None:
            zeta = {"type": a["zeta"][0], "value": _number(a["zeta"][1], "criterion.zeta.value")}
        out["criterion"] = {"zeta": zeta, "jmax": a["jmax"], "j0": a["j0"], "mode": a["mode"]}
    elif cmd == "verify":
        out["verify"] = {"suite": a["suite"], "resolution": a["resolution"]}
    elif cmd == "sharpness":
        out["sharpness"] = {"gamma": a["gamma"], "alpha_min": a["alpha_min"], "alpha_max": a["alpha_max"],
                            "step": a["step"], "dimension": a["dimension"], "r_max": a["r_max"]}
    return out


def _number(text: str, path: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise ConfigError(f"{text!r} is not a number", path) from None


def _default_manifold(command: str) -> dict:
    if command == "criterion":
        return {**DEFAULT_MANIFOLD, "family": "space_form"}
    return dict(DEFAULT_MANIFOLD)


def _resolve(args: argparse.Namespace) -> dict:
    """Defaults, then the config file, then command-line flags."""
    base = cfg.load(args.config) if args.config else {}
    if "family" in vars(args) and "family" not in base.get("manifold", {}):
        base = cfg.merge({"manifold": _default_manifold(args.command)}, base)
    merged = cfg.merge(base, _overrides(args))
    return cfg.validate(merged)


def _csv_text(header: list[str], rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in row])
    return buf.getvalue()


# ------------------------------------------------------------------ commands

def _cmd_manifold(conf: dict):
    M = cfg.build_manifold(conf["manifold"])
    cls = classify(M)
    radii = [R for R in (1.0, 2.0, 4.0, 8.0, 16.0, 32.0) if M.eps0 < R <= M.r_max]
    scales = curvature_scales(M, radii)
    vol = volume_ball(M, M.r_max) if cls.finite_volume else math.inf
    result = {"manifold": M.describe(), "classification": list(cls.labels),
              "joints": list(M.warping.joints), "volume": vol,
              "curvature_scales": [{"R": c.R, "K": c.K, "theta": c.theta} for c in scales]}
    text = (f"{M.warping.family} n={M.n}: {cls.labels[0]}, {cls.labels[1]}"
            + (f", volume {vol:.10g}" if math.isfinite(vol) else ""))
    rows = [(c.R, c.K, c.theta) for c in scales]
    return result, text, (["R", "K", "theta"], rows), 0


def _cmd_spectrum(conf: dict):
    M = cfg.build_manifold(conf["manifold"])
    sc = conf.get("spectrum", {})
    base = SpectralSettings()
    settings = SpectralSettings(h_fraction=sc.get("h_fraction", base.h_fraction),
                                h_cap=sc.get("h_cap", base.h_cap),
                                convergence_tol=sc.get("convergence_tol", base.convergence_tol))
    kind = sc.get("domain", "ess")
    if kind == "ess":
        est = lambda1_ess(M, settings=settings)
        result = {"domain": {"kind": "essential"}, **est.to_dict()}
        rows = list(zip(est.radii, est.values))
        return result, f"lambda_1^ess ~ {est.value:.10g}", (["R", "lambda1_exterior"], rows), 0
    if kind == "exterior":
        if "R" not in sc:
            raise ConfigError("exterior domain needs R", "spectrum.R")
        D = RadialDomain.exterior(sc["R"])
    elif kind == "annulus":
        if "R" not in sc or "R2" not in sc:
            raise ConfigError("annulus needs R and R2", "spectrum")
        D = RadialDomain.annulus(sc["R"], sc["R2"])
    else:
        D = RadialDomain.whole()
    est = lambda1(M, D, settings)
    result = {"domain": D.describe(), **est.to_dict()}
    text = f"lambda_1 ~ {est.value:.10g} (Barta lower bound {est.barta_lower:.6g}, converged={est.converged})"
    return result, text, (["outer_radius", "lambda1"], list(est.ladder)), 0


def _cmd_green(conf: dict):
    M = cfg.build_manifold(conf["manifold"])
    gc = conf.get("green", {})
    kind = gc.get("kind", "minimal")
    if kind == "minimal":
        G = minimal_green(M)
    elif kind == "dirichlet":
        if "R" not in gc:
            raise ConfigError("dirichlet kind needs R", "green.R")
        G = dirichlet_green(M, gc["R"])
    else:
        G = parabolic_green(M)
    g1 = float(G(min(1.0, G.radii[-1]))[0])
    result = {"manifold": M.describe(), **G.to_dict(), "value_at_1": g1,
              "profile": [list(r) for r in G.to_rows()]}
    text = f"{kind} Green's function: G(1) = {g1:.12g}"
    return result, text, (["r", "G"], G.to_rows()), 0


def _cmd_poisson(conf: dict):
    M = cfg.build_manifold(conf["manifold"])
    pc = conf.get("poisson", {})
    source = cfg.build_source(pc.get("source", {"type": "expdecay", "c": 1.0}))
    kwargs = {}
    if "grid_step" in pc:
        kwargs["h"] = pc["grid_step"]
    if "r_out" in pc:
        kwargs["r_out"] = pc["r_out"]
    cls = classify(M)
    if cls.non_parabolic:
        sol = solve_poisson(M, source, **kwargs)
    else:
        sol = solve_poisson_finite_volume(M, source, **kwargs)
    if isinstance(sol, PotentialGrowth):
        result = {"manifold": M.describe(), "source": source.describe(), **sol.to_dict()}
        text = f"u(p) {sol.status}: partial integrals grow with exponent {sol.growth_exponent:.4f}"
        rows = list(zip(sol.radii, sol.partial_integrals))
        return result, text, (["T", "partial_integral"], rows), 0
    result = {"manifold": M.describe(), "source": source.describe(), **sol.to_dict(),
              "profile": [list(r) for r in sol.to_rows()]}
    err = sol.diagnostics.get("pole_error_estimate")
    text = (f"u(p) = {sol.value_at_pole:.12g}" + (f" +/- {err:.2g}" if err is not None else "")
            + f"; residual RMS {sol.residual_rms:.3g}")
    return result, text, (["r", "u"], sol.to_rows()), 0


def _cmd_criterion(conf: dict):
    M = cfg.build_manifold(conf["manifold"])
    cc = conf.get("criterion", {})
    z = cc.get("zeta", {"type": "power", "value": 1.5})
    zeta = DecayEnvelope.power(z["value"]) if z["type"] == "power" else DecayEnvelope.constant(z["value"])
    mode = {"numerical": "numerical", "barta": "barta_certified"}[cc.get("mode", "numerical")]
    rep = evaluate(series_terms(M, zeta, cc.get("j0", 2), cc.get("jmax", 64), mode))
    text = f"verdict {rep.verdict}: fitted exponent {rep.fit.slope:.4f} ({rep.evidence['reason']})"
    rows = [(t.j, t.theta_increment, t.lambda1, t.zeta, t.b, s) for t, s in zip(rep.terms, rep.partial_sums)]
    return rep.to_dict(), text, (["j", "theta_increment", "lambda1", "zeta", "b", "partial_sum"], rows), 0


def _cmd_verify(conf: dict):
    vc = conf.get("verify", {})
    report = run(vc.get("suite", "all"), vc.get("resolution", 1))
    lines = [f"{s['suite']}: {'PASS' if s['passed'] else 'FAIL'}" for s in report["suites"]]
    rows = [(s["suite"], c["check"], c["passed"]) for s in report["suites"] for c in s["checks"]]
    code = EXIT_OK if report["passed"] else EXIT_VERIFY
    return report, "\n".join(lines), (["suite", "check", "passed"], rows), code


def _cmd_sharpness(conf: dict):
    sc = conf.get("sharpness", {})
    rep = sharpness_sweep(sc.get("gamma", 2.0), sc.get("dimension", 3), sc.get("alpha_min"),
                          sc.get("alpha_max"), sc.get("step", 0.05), sc.get("r_max", 400.0))
    det = "none" if rep.detected_threshold is None else f"{rep.detected_threshold:.4g}"
    text = (f"gamma={rep.gamma:g}: detected threshold {det}, expected {rep.theoretical_threshold:.4g}, "
            f"monotone={rep.monotone}")
    return rep.to_dict(), text, (["alpha", "status", "growth_exponent", "value_estimate"], rep.to_rows()), 0


COMMANDS = {"manifold": _cmd_manifold, "spectrum": _cmd_spectrum, "green": _cmd_green,
            "poisson": _cmd_poisson, "criterion": _cmd_criterion, "verify": _cmd_verify,
            "sharpness": _cmd_sharpness}


def dumps(report: dict) -> str:
    return json.dumps(jsonable(report), indent=2, allow_nan=False) + "\n"


def run_cli(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        args = build_parser().parse_args(argv)
        conf = _resolve(args)
        result, text, (header, rows), code = COMMANDS[args.command](conf)
        report = {"schema_version": SCHEMA_VERSION, "tool_version": __version__,
                  "command": args.command, "config": conf, "result": result}
        out = conf.get("output", {})
        if "json" in out:
            with open(out["json"], "w") as fh:
                fh.write(dumps(report))
        if "csv" in out:
            with open(out["csv"], "w", newline="") as fh:
                fh.write(_csv_text(header, rows))
        if getattr(args, "export", None) == "csv":
            stdout.write(_csv_text(header, rows))
        else:
            stdout.write(text + "\n")
            if args.command == "criterion" and "json" not in out:
                stdout.write(dumps(report))
        return code
    except PreconditionError as exc:
        stderr.write(f"error: {exc}\n")
        return EXIT_PRECONDITION
    except NumericalError as exc:
        stderr.write(f"numerical error: {exc}\n")
        return EXIT_NUMERICAL
    except OSError as exc:
        stderr.write(f"error: {exc}\n")
        return EXIT_PRECONDITION


def main(argv=None) -> None:
    sys.exit(run_cli(argv))


if __name__ == "__main__":
    main()
