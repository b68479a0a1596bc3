import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import hyperbolic_green_exact, model
from warpedpoisson.errors import DomainError, InvalidConstructionError, InversionError, NotNonParabolicError
from warpedpoisson.geometry import volume_ball
from warpedpoisson.green import (
    dirichlet_green,
    flux_on_level,
    gradient_ratio_profile,
    level_set,
    level_set_mass,
    minimal_green,
    parabolic_green,
    parabolic_residual,
    radius_of_level,
    tail_l2,
)
from warpedpoisson.kernels import scaled_green
from warpedpoisson.numerics import fit_line, integrate


def test_euclid_closed_form(green_euclid):
    r = np.array([0.5, 1.0, 2.0])
    assert np.allclose(green_euclid(r) * 4 * math.pi * r, 1.0, rtol=1e-8, atol=0)
    assert green_euclid.normalization == pytest.approx(1 / (4 * math.pi))


def test_hyperbolic_closed_form(green_hyperbolic):
    r = np.geomspace(0.01, 30.0, 50)
    assert np.allclose(green_hyperbolic(r) / hyperbolic_green_exact(r), 1.0, rtol=1e-8, atol=0)


def test_power_exp_asymptotic_constant(powexp2):
    G = minimal_green(powexp2)
    r = np.linspace(4.0, 12.0, 9)
    scaled = np.exp(G.log_value(r) + np.log(r) + 2 * r**2)
    assert np.all(np.abs(np.diff(scaled)) < 0.01 * scaled[-1])
    assert scaled[-1] * 4 * math.pi == pytest.approx(0.25, rel=0.01)


def test_minimal_green_positive_decreasing(powexp2):
    G = minimal_green(powexp2)
    logs = G.log_value(G.radii)
    assert np.all(np.isfinite(logs))
    assert np.all(np.diff(logs) < 0)


def test_parabolic_manifold_has_no_minimal_green(cusp):
    with pytest.raises(NotNonParabolicError):
        minimal_green(cusp)


def test_dirichlet_value(euclid):
    GR = dirichlet_green(euclid, 2.0)
    assert float(GR(1.0)[0]) == pytest.approx(1 / (8 * math.pi), rel=1e-12)
    assert float(GR(3.0)[0]) == 0.0
    with pytest.raises(DomainError):
        dirichlet_green(euclid, 100.0)


def test_dirichlet_increasing_in_radius(hyperbolic):
    r = np.geomspace(0.01, 3.0, 40)
    vals = [dirichlet_green(hyperbolic, R)(r) for R in (3.0, 4.0, 8.0)]
    assert np.all(vals[0] <= vals[1]) and np.all(vals[1] <= vals[2])


@pytest.mark.parametrize("family,params", [("euclidean", {}), ("space_form", {}), ("power_exp", {"gamma": 2.0})])
def test_exhaustion_matches_tail(family, params):
    M = model(family, **params)
    G = minimal_green(M)
    for R in (1.0, 2.0):
        r = R * (1 - np.geomspace(0.5, 1e-3, 10))
        gap = G(r) - dirichlet_green(M, R)(r)
        tail = scaled_green(M, R) * math.exp(-float(M.log_weight(np.array([R]))[0])) / M.sphere_area_const
        assert np.allclose(gap, tail, rtol=1e-8, atol=0)


def test_level_set_euclid(green_euclid):
    ann = level_set(green_euclid, 1 / (8 * math.pi), 1 / (4 * math.pi))
    assert ann.inner_radius == pytest.approx(1.0, abs=1e-10)
    assert ann.outer_radius == pytest.approx(2.0, abs=1e-10)
    assert level_set(green_euclid, 0.0, 1.0).outer_radius == math.inf


def test_level_set_hyperbolic_inverse(green_hyperbolic):
    for s in (1.0, 0.1, 1e-3, 1e-8):
        r = radius_of_level(green_hyperbolic, s)
        assert 1 / math.tanh(r) - 1 == pytest.approx(4 * math.pi * s, rel=1e-10)


def test_level_set_errors(green_euclid):
    with pytest.raises(DomainError):
        level_set(green_euclid, 0.5, 0.2)
    with pytest.raises(InversionError):
        radius_of_level(green_euclid, 1e-9)


def test_level_set_mass_examples(euclid, green_euclid):
    A = float(green_euclid(1.0)[0])
    ball = level_set(green_euclid, A, math.inf)
    assert level_set_mass(euclid, green_euclid, ball) == pytest.approx(0.5, rel=1e-10)
    thin = level_set(green_euclid, A, A * (1 + 1e-15))
    assert level_set_mass(euclid, green_euclid, thin) == pytest.approx(0.0, abs=1e-12)


def test_level_set_mass_additive(hyperbolic, green_hyperbolic):
    a, m, b = 1e-4, 1e-2, 1.0
    whole = level_set_mass(hyperbolic, green_hyperbolic, level_set(green_hyperbolic, a, b))
    parts = (level_set_mass(hyperbolic, green_hyperbolic, level_set(green_hyperbolic, a, m))
             + level_set_mass(hyperbolic, green_hyperbolic, level_set(green_hyperbolic, m, b)))
    assert whole == pytest.approx(parts, rel=1e-10)


def test_ball_of_large_level_inside_unit_ball(powexp2):
    for M in (model("euclidean"), model("space_form"), powexp2):
        G = minimal_green(M)
        g1 = float(G(1.0)[0])
        A = max(g1, 1 / g1)
        assert radius_of_level(G, A) <= 1.0 + 1e-12


def test_flux_examples(euclid, green_euclid, hyperbolic, green_hyperbolic):
    for s in np.geomspace(2e-3, 10.0, 7):
        assert flux_on_level(euclid, green_euclid, float(s)) == pytest.approx(1.0, abs=1e-10)
    s = float(green_hyperbolic(1.0)[0])
    assert flux_on_level(hyperbolic, green_hyperbolic, s) == pytest.approx(1.0, abs=1e-8)
    GR = dirichlet_green(hyperbolic, 5.0)
    assert flux_on_level(hyperbolic, GR, float(GR(2.0)[0])) == pytest.approx(1.0, abs=1e-8)
    with pytest.raises(DomainError):
        flux_on_level(euclid, green_euclid, -1.0)


@pytest.mark.parametrize("family,params", [("euclidean", {}), ("space_form", {}), ("power_exp", {"gamma": 2.0})])
def test_flux_identity_twenty_levels(family, params):
    M = model(family, **params)
    G = minimal_green(M)
    levels = G(np.geomspace(0.05, 5.0, 20))
    assert max(abs(flux_on_level(M, G, float(s)) - 1.0) for s in levels) < 1e-6


def test_parabolic_green_properties(cusp):
    P = parabolic_green(cusp)
    assert abs(P.diagnostics["mean"]) < 1e-8
    assert P.volume == pytest.approx(volume_ball(cusp, 59.0), rel=1e-10)
    assert parabolic_residual(P) < 1e-6
    # flux -omega phi^{n-1} G' tends to 1 at the pole
    r = np.array([1e-4, 1e-3])
    flux = -cusp.sphere_area_const * np.exp(cusp.log_weight(r)) * P.derivative(r)
    assert np.allclose(flux, 1.0, atol=1e-8)


def test_parabolic_mean_by_independent_quadrature(cusp):
    P = parabolic_green(cusp)
    w = lambda t: P(t) * cusp.sphere_area_const * np.exp(cusp.log_weight(t))
    pieces = [integrate(w, a, b, 1e-300, rtol=1e-12).value
              for a, b in ((1e-6, 0.5), (0.5, 1.0), (1.0, 5.0), (5.0, 59.0))]
    assert abs(math.fsum(pieces)) < 1e-8


def test_parabolic_construction_errors(euclid):
    with pytest.raises(InvalidConstructionError):
        parabolic_green(euclid)
    with pytest.raises(InvalidConstructionError):
        parabolic_green(model("euclidean", n=2))


def test_tail_l2_hyperbolic_slope(hyperbolic, green_hyperbolic):
    R = np.linspace(2.0, 10.0, 9)
    vals = [tail_l2(hyperbolic, green_hyperbolic, x).value for x in R]
    assert fit_line(R, np.log(vals)).slope == pytest.approx(-2.0, abs=1e-3)


def test_tail_l2_euclid_truncated(euclid, green_euclid):
    a = tail_l2(euclid, green_euclid, 5.0)
    b = tail_l2(euclid, green_euclid, 10.0)
    assert a.truncated and b.truncated
    # integrand is constant 1/(4 pi)
    assert a.value == pytest.approx((60.0 - 5.0) / (4 * math.pi), rel=1e-10)
    assert a.value - b.value == pytest.approx(5.0 / (4 * math.pi), rel=1e-10)


def test_tail_l2_parabolic_decay(cusp):
    P = parabolic_green(cusp)
    R = np.arange(5.0, 31.0, 5.0)
    vals = [tail_l2(cusp, P, x).value for x in R]
    slope = fit_line(R, np.log(vals)).slope
    assert slope <= -2 * math.sqrt(0.8 * 0.96) + 0.05


def test_gradient_ratio_euclid(euclid, green_euclid):
    prof = gradient_ratio_profile(euclid, green_euclid)
    assert np.allclose(prof.ratio, 1 / (prof.radii * math.sqrt(10.0)), rtol=1e-9)
    assert prof.argsup == pytest.approx(0.3)
    assert prof.sup == pytest.approx(1 / (0.3 * math.sqrt(10.0)), rel=1e-9)


def test_gradient_ratio_hyperbolic(hyperbolic, green_hyperbolic):
    prof = gradient_ratio_profile(hyperbolic, green_hyperbolic)
    expected = (1 / math.tanh(0.3) + 1) / math.sqrt(1 / math.tanh(0.1))
    assert prof.sup == pytest.approx(expected, rel=1e-8)


@pytest.mark.parametrize("family,params", [("euclidean", {}), ("space_form", {}),
                                           ("power_exp", {"gamma": 2.0}), ("power_exp", {"gamma": 3.0})])
def test_gradient_ratio_bounded(family, params):
    M = model(family, **params)
    prof = gradient_ratio_profile(M, minimal_green(M))
    assert np.all(np.isfinite(prof.ratio)) and 0 < prof.sup < 100


@given(st.floats(min_value=1e-6, max_value=1e2))
@settings(max_examples=40, deadline=None)
def test_level_roundtrip(s):
    G = minimal_green(model("space_form"))
    r = radius_of_level(G, s)
    assert float(G(r)[0]) == pytest.approx(s, rel=1e-9)
