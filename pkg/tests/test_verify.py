import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import model
from warpedpoisson.errors import PreconditionError
from warpedpoisson.verify import (
    SUITES,
    donnelly_check,
    exponential_lower_check,
    jsonable,
    levelset_bound_check,
    run,
    run_suite,
    sharpness_sweep,
    tail_asymptotic_check,
)


@pytest.fixture(scope="module")
def sweep_quadratic():
    return sharpness_sweep(2.0)


def test_sharpness_quadratic(sweep_quadratic):
    assert sweep_quadratic.monotone
    assert sweep_quadratic.detected_threshold == pytest.approx(0.0, abs=0.05 + 1e-9)
    assert sweep_quadratic.passed


def test_sharpness_rows_carry_evidence(sweep_quadratic):
    for row in sweep_quadratic.classifications:
        if row["status"] == "finite":
            assert row["value_estimate"] > 0
        if row["status"] == "divergent":
            assert row["growth_exponent"] > 0
            # growth exponent of partial integrals is 1 - alpha - gamma/2
            assert row["growth_exponent"] == pytest.approx(-row["alpha"], abs=0.02)
    assert len(sweep_quadratic.to_rows()) == len(sweep_quadratic.alphas)


def test_sharpness_bounded_curvature():
    rep = sharpness_sweep(0.0)
    assert rep.detected_threshold == pytest.approx(1.0, abs=0.05 + 1e-9)
    assert rep.monotone


def test_sharpness_bounded_source_finite_for_cubic():
    rep = sharpness_sweep(3.0, alpha_min=-0.8, alpha_max=0.2, step=0.1)
    zero = next(r for r in rep.classifications if r["alpha"] == 0.0)
    assert zero["status"] == "finite"
    assert rep.passed


def test_sharpness_preconditions():
    with pytest.raises(PreconditionError):
        sharpness_sweep(2.0, alpha_min=0.5, alpha_max=1.0)
    with pytest.raises(PreconditionError):
        sharpness_sweep(2.0, step=0.0)
    with pytest.raises(PreconditionError):
        sharpness_sweep(-1.0)


@pytest.mark.parametrize("gamma,expected", [(2.0, 0.25), (3.0, 0.2), (0.0, 0.5)])
def test_tail_asymptotic(gamma, expected):
    rep = tail_asymptotic_check(gamma)
    assert rep["passed"]
    assert rep["expected_limit"] == pytest.approx(expected)
    assert rep["limit_estimate"] == pytest.approx(expected, rel=0.02)
    assert rep["spreads_shrinking"]


def test_donnelly_hyperbolic(hyperbolic):
    rep = donnelly_check(hyperbolic)
    assert not rep["skipped"] and rep["passed"]
    assert rep["fit"]["slope"] == pytest.approx(-2.0, abs=0.05)
    assert rep["bound"] == pytest.approx(-2 * math.sqrt(0.8 * rep["lambda_ess"]) + 0.05)


def test_donnelly_parabolic(cusp):
    rep = donnelly_check(cusp)
    assert rep["kind"] == "parabolic" and rep["passed"]


def test_donnelly_skipped_without_gap(euclid):
    rep = donnelly_check(euclid)
    assert rep["skipped"] and rep["passed"]
    assert "hypothesis void" in rep["reason"]


def test_levelset_hyperbolic_bounded(hyperbolic):
    rep = levelset_bound_check(hyperbolic, k_max=6, decades=2)
    assert rep["bounded"]
    assert 0 < rep["max_ratio"] < 10
    assert len(rep["rows"]) == 12


def test_levelset_subannulus_smaller(euclid):
    rep = levelset_bound_check(euclid, k_max=3, decades=1)
    masses = [r["mass"] for r in rep["rows"]]
    # L(d e, e) grows as d shrinks
    assert masses == sorted(masses)


def test_exponential_lower_bound(hyperbolic, euclid):
    assert exponential_lower_check(hyperbolic)["passed"]
    assert exponential_lower_check(euclid)["passed"]


def test_exponential_lower_negative_control(hyperbolic):
    rep = exponential_lower_check(hyperbolic, C0_factor=0.1)
    assert not rep["passed"] and rep["failures"] > 0


def test_jsonable_handles_special_values():
    data = {"a": np.float64(1.5), "b": math.inf, "c": -math.inf, "d": math.nan,
            "e": np.arange(3), "f": (np.bool_(True), np.int64(4))}
    out = jsonable(data)
    assert out == {"a": 1.5, "b": "inf", "c": "-inf", "d": "nan", "e": [0, 1, 2], "f": [True, 4]}
    json.dumps(out, allow_nan=False)


@given(st.recursive(st.floats() | st.integers() | st.booleans() | st.text(max_size=4),
                    lambda c: st.lists(c, max_size=4) | st.dictionaries(st.text(max_size=4), c, max_size=4),
                    max_leaves=12))
def test_jsonable_always_serializable(obj):
    json.dumps(jsonable(obj), allow_nan=False)


def test_unknown_suite():
    with pytest.raises(PreconditionError):
        run_suite("nope")


@pytest.mark.parametrize("name", ["green_oracle", "flux", "exhaustion", "parabolic", "containment"])
def test_fast_suites_pass(name):
    rep = run_suite(name)
    assert rep["passed"] and rep["resolution_stable"]
    assert [c["check"] for c in rep["checks"]] == [c["check"] for c in rep["refined"]]


def test_suite_registry_complete():
    assert set(SUITES) == {"green_oracle", "flux", "poisson", "spectrum", "exhaustion", "criterion",
                           "sharpness", "donnelly", "parabolic", "containment", "levelset",
                           "tail_asymptotic"}


def test_run_report_shape():
    rep = run("flux")
    assert rep["schema_version"] == 1
    assert rep["passed"] is True
    assert [s["suite"] for s in rep["suites"]] == ["flux"]
    json.dumps(rep, allow_nan=False)
