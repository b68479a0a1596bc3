import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import model
from warpedpoisson.errors import InvalidConstructionError, NotNonParabolicError, PreconditionError
from warpedpoisson.green import parabolic_green
from warpedpoisson.numerics import integrate
from warpedpoisson.poisson import (
    PotentialGrowth,
    RadialSolution,
    RadialSource,
    potential_growth,
    solve_poisson,
    solve_poisson_finite_volume,
)


def test_euclid_exponential_source(euclid):
    sol = solve_poisson(euclid, RadialSource.expdecay(1.0))
    assert isinstance(sol, RadialSolution)
    assert sol.value_at_pole == pytest.approx(1.0, rel=1e-10)
    assert sol.diagnostics["fubini_gap"] < 1e-8
    assert sol.residual_rms < 1e-6


def test_hyperbolic_exponential_source(hyperbolic):
    sol = solve_poisson(hyperbolic, RadialSource.expdecay(2.0))
    assert sol.value_at_pole == pytest.approx(0.125, rel=1e-10)
    assert sol.diagnostics["fubini_gap"] < 1e-8
    assert sol.residual_rms < 1e-6


def test_euclid_profile_closed_form(euclid):
    # u(r) = (2 - (r + 2) e^{-r}) / r for f = e^{-r} in three dimensions
    sol = solve_poisson(euclid, RadialSource.expdecay(1.0), r_out=5.0)
    r = sol.radii[1:]
    exact = (2.0 - (r + 2.0) * np.exp(-r)) / r
    assert np.allclose(sol.values[1:], exact, rtol=1e-8, atol=0)


def test_zero_source(hyperbolic):
    sol = solve_poisson(hyperbolic, RadialSource.zero())
    assert sol.value_at_pole == 0.0
    assert np.all(sol.values == 0.0)
    assert sol.residual_rms == 0.0


def test_power_exp_fubini(powexp2):
    sol = solve_poisson(powexp2, RadialSource.power(0.5))
    assert sol.diagnostics["fubini_gap"] < 1e-8
    assert sol.residual_rms < 1e-6


def test_parabolic_rejected(cusp):
    with pytest.raises(NotNonParabolicError):
        solve_poisson(cusp, RadialSource.expdecay(1.0))


def test_divergent_potential_reports_growth():
    M = model("euclidean", r_max=400.0)
    out = solve_poisson(M, RadialSource.power(1.5))
    assert isinstance(out, PotentialGrowth)
    assert out.status == "divergent"
    # f Gs ~ r^{1 - 1.5}, so partial integrals grow like r^{0.5}
    assert out.growth_exponent == pytest.approx(0.5, abs=0.02)
    assert all(b > a for a, b in zip(out.partial_integrals, out.partial_integrals[1:]))


def test_growth_classifies_fast_decay_as_finite():
    M = model("euclidean", r_max=400.0)
    out = potential_growth(M, RadialSource.power(3.0))
    assert out.status == "finite"
    # exact value: int_0^inf r (1+r)^{-3} dr = 1/2
    assert out.value_estimate == pytest.approx(0.5, rel=0.01)


@given(st.floats(min_value=0.5, max_value=4.0), st.floats(min_value=0.1, max_value=5.0))
@settings(max_examples=15, deadline=None)
def test_linearity_in_source(c, k):
    M = model("euclidean")
    a = solve_poisson(M, RadialSource.expdecay(c)).value_at_pole
    # u(p) = int r e^{-c r} dr = 1/c^2
    assert a == pytest.approx(1.0 / c**2, rel=1e-9)
    scaled = RadialSource("scaled", lambda r: k * np.exp(-c * r), RadialSource.expdecay(c).envelope)
    # the envelope of k e^{-cr} is k times larger; only summability matters here
    b = solve_poisson(M, scaled).value_at_pole
    assert b == pytest.approx(k * a, rel=1e-8)


def test_sampled_source_matches_analytic(euclid):
    r = np.linspace(0.0, 30.0, 3001)
    sampled = RadialSource.sampled(r, np.exp(-r))
    sol = solve_poisson(euclid, sampled)
    # truncation at 30 changes the value by about 31 e^{-30}
    assert sol.value_at_pole == pytest.approx(1.0, rel=1e-7)


def test_source_preconditions():
    with pytest.raises(PreconditionError):
        RadialSource.expdecay(0.0)
    with pytest.raises(PreconditionError):
        RadialSource.sampled([0.0, 1.0], [1.0, 2.0])
    with pytest.raises(PreconditionError):
        RadialSource.sampled([0.1, 1.0, 2.0, 3.0], [1.0, 1.0, 1.0, 1.0])


def test_bump_unit_mass(cusp):
    b = RadialSource.bump(cusp)
    res = integrate(lambda t: b(t) * np.exp(cusp.log_weight(t)), 0.0, 1.0, tol=1e-300, rtol=1e-13)
    assert cusp.sphere_area_const * res.value == pytest.approx(1.0, rel=1e-12)
    assert b(1.5) == 0.0


def test_finite_volume_zero_source(cusp):
    sol = solve_poisson_finite_volume(cusp, RadialSource.zero(), cross_check=False)
    assert np.all(sol.values == 0.0)
    assert sol.diagnostics["alpha_avg"] == 0.0


def test_finite_volume_bump_source(cusp):
    sol = solve_poisson_finite_volume(cusp, RadialSource.bump(cusp), cross_check=False)
    assert sol.diagnostics["alpha_avg"] == pytest.approx(1.0, rel=1e-12)
    assert sol.residual_rms < 1e-6


def test_finite_volume_exponential_source(cusp):
    sol = solve_poisson_finite_volume(cusp, RadialSource.expdecay(1.0))
    assert sol.residual_rms < 1e-6
    assert sol.diagnostics["green_route_gap"] < 1e-8 * max(1.0, abs(sol.value_at_pole))
    assert abs(sol.diagnostics["flux_mismatch"]) < 1e-8


def test_finite_volume_rejects_infinite_volume(euclid):
    with pytest.raises(InvalidConstructionError):
        solve_poisson_finite_volume(euclid, RadialSource.zero())


def test_finite_volume_green_route_independent(cusp):
    # recompute the Green route value here rather than trusting the diagnostics
    sol = solve_poisson_finite_volume(cusp, RadialSource.expdecay(2.0), cross_check=False)
    P = parabolic_green(cusp)
    alpha = sol.diagnostics["alpha_avg"]
    bump = RadialSource.bump(cusp)
    w = lambda t: (P(t) * (np.exp(-2 * t) - alpha * bump(t)) * cusp.sphere_area_const
                   * np.exp(cusp.log_weight(t)))
    pieces = [integrate(w, a, b, 1e-300, rtol=1e-12).value
              for a, b in ((1e-7, 1.0), (1.0, 10.0), (10.0, cusp.r_max))]
    assert math.fsum(pieces) == pytest.approx(sol.value_at_pole, rel=1e-7, abs=1e-10)
