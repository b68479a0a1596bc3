import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from warpedpoisson.errors import (
    BudgetExceededError,
    EvaluationError,
    InsufficientDataError,
    InvalidMassError,
    PreconditionError,
)
from warpedpoisson.numerics import (
    TailEnvelope,
    central_derivatives,
    fit_line,
    fit_log_slope,
    integrate,
    rayleigh_quotient,
    smallest_eigenpair,
)


def test_integrate_linear_exact():
    res = integrate(lambda x: x, 0.0, 1.0, 1e-10)
    assert abs(res.value - 0.5) <= 1e-10
    assert res.error_estimate >= 0 and res.evaluations >= 1


def test_integrate_exponential_tail():
    res = integrate(lambda t: np.exp(-t), 0.0, math.inf, 1e-10, envelope=TailEnvelope(1.0, math.exp(-1), rate=1.0))
    assert abs(res.value - 1.0) <= 1e-10


def test_integrate_gamma_two():
    # antiderivative -(t+1) e^{-t}
    env = TailEnvelope(1.0, 2.0 * math.exp(-1.0), exponent=-1.0, rate=1.0)
    res = integrate(lambda t: t * np.exp(-t), 0.0, math.inf, 1e-10, envelope=env)
    assert abs(res.value - 1.0) <= 1e-10


def test_integrate_power_tail_without_truncation():
    env = TailEnvelope(1.0, 1.0, exponent=2.0)
    res = integrate(lambda t: 1.0 / (1.0 + t) ** 2, 0.0, math.inf, 1e-12, envelope=env)
    assert abs(res.value - 1.0) < 1e-11


def test_integrate_reports_bad_sample():
    with pytest.raises(EvaluationError) as info:
        integrate(lambda t: np.where(t > 0.5, np.nan, t), 0.0, 1.0, 1e-10)
    assert info.value.abscissa > 0.5


def test_integrate_budget_carries_estimate():
    with pytest.raises(BudgetExceededError) as info:
        integrate(lambda t: np.sin(1.0 / np.maximum(t, 1e-300)), 0.0, 1.0, 1e-14, max_evals=3000)
    assert math.isfinite(info.value.best_estimate)


def test_integrate_preconditions():
    with pytest.raises(PreconditionError):
        integrate(lambda t: t, 1.0, 0.0, 1e-10)
    with pytest.raises(PreconditionError):
        integrate(lambda t: t, 0.0, 1.0, 0.0)
    with pytest.raises(PreconditionError):
        integrate(lambda t: t, 0.0, math.inf, 1e-10)


def test_integrate_additive_over_split():
    f = lambda t: np.cos(3 * t) * np.exp(-t)
    whole = integrate(f, 0.0, 4.0, 1e-12)
    left = integrate(f, 0.0, 1.7, 1e-12)
    right = integrate(f, 1.7, 4.0, 1e-12)
    assert abs(whole.value - left.value - right.value) <= (
        whole.error_estimate + left.error_estimate + right.error_estimate + 1e-14)


def test_integrate_deterministic():
    f = lambda t: np.sqrt(t) * np.exp(-t)
    a = integrate(f, 0.0, 5.0, 1e-12)
    b = integrate(f, 0.0, 5.0, 1e-12)
    assert a == b


@given(st.integers(min_value=0, max_value=20), st.floats(min_value=-3, max_value=3),
       st.floats(min_value=0.1, max_value=4))
@settings(max_examples=40, deadline=None)
def test_integrate_polynomials(k, a, width):
    b = a + width
    exact = (b ** (k + 1) - a ** (k + 1)) / (k + 1)
    res = integrate(lambda t: t ** k, a, b, 1e-10, rtol=1e-12)
    assert abs(res.value - exact) <= 1e-9 * max(1.0, abs(exact))


def test_envelope_tail_and_truncation():
    env = TailEnvelope(1.0, 1.0, rate=2.0)
    assert env.tail(1.0) == pytest.approx(0.5)
    T = env.truncation_radius(1e-10)
    assert env.tail(T) <= 1e-10
    assert not TailEnvelope(1.0, 1.0, exponent=1.0).summable
    with pytest.raises(PreconditionError):
        TailEnvelope(0.0, 1.0)


def test_discrete_dirichlet_laplacian():
    N = 1000
    h = 1.0 / N
    m = N - 1
    lam, v = smallest_eigenpair(np.full(m, 2 / h**2), np.full(m - 1, -1 / h**2), np.ones(m))
    assert lam == pytest.approx((2 / h**2) * (1 - math.cos(math.pi * h)), rel=1e-10)
    assert abs(lam / math.pi**2 - 1) < 1e-4
    assert v @ v == pytest.approx(1.0)


def test_identity_pencil():
    lam, _ = smallest_eigenpair(np.ones(2), np.zeros(1), np.ones(2))
    assert lam == pytest.approx(1.0)


def test_eigen_bad_mass():
    with pytest.raises(InvalidMassError):
        smallest_eigenpair(np.ones(3), np.zeros(2), np.array([1.0, 0.0, 1.0]))


@given(st.integers(min_value=3, max_value=60), st.floats(min_value=0.01, max_value=100.0),
       st.integers(min_value=0, max_value=2**31 - 1))
@settings(max_examples=30, deadline=None)
def test_eigen_homogeneity_and_rayleigh(m, c, seed):
    rng = np.random.default_rng(seed)
    e = -rng.uniform(0.5, 2.0, m - 1)
    d = np.abs(np.concatenate([[0.0], e])) + np.abs(np.concatenate([e, [0.0]])) + rng.uniform(0.1, 1.0, m)
    w = rng.uniform(0.5, 2.0, m)
    lam, v = smallest_eigenpair(d, e, w)
    assert rayleigh_quotient(d, e, w, v) == pytest.approx(lam, rel=1e-12)
    assert v @ (w * v) == pytest.approx(1.0, rel=1e-12)
    lam_c, _ = smallest_eigenpair(c * d, c * e, w)
    assert lam_c == pytest.approx(c * lam, rel=1e-10)
    # rescale stiffness and mass together
    lam_s, _ = smallest_eigenpair(c * d, c * e, c * w)
    assert lam_s == pytest.approx(lam, rel=1e-10)


def test_fit_log_slope_examples():
    x = np.arange(1.0, 11.0)
    assert fit_log_slope(x, x**2).slope == pytest.approx(2.0, abs=1e-12)
    f = fit_log_slope(x, 5.0 / x)
    assert f.slope == pytest.approx(-1.0, abs=1e-12)
    assert f.intercept == pytest.approx(math.log(5.0), abs=1e-12)
    j = np.arange(10.0, 101.0)
    assert fit_log_slope(j, j**1.5 * (1 + 0.01 * np.sin(j))).slope == pytest.approx(1.5, abs=0.02)


def test_fit_needs_four_points():
    with pytest.raises(InsufficientDataError):
        fit_log_slope([1.0, 2.0, 3.0], [1.0, 2.0, 3.0])
    with pytest.raises(InsufficientDataError):
        fit_line([1.0, 2.0], [1.0, 2.0])


@given(st.floats(min_value=-4, max_value=4), st.floats(min_value=0.01, max_value=100))
@settings(max_examples=50, deadline=None)
def test_fit_recovers_power_laws(p, c):
    x = np.geomspace(1.0, 50.0, 12)
    fit = fit_log_slope(x, c * x**p)
    assert fit.slope == pytest.approx(p, abs=1e-9)
    assert fit.residual_rms < 1e-9


def test_central_derivatives_sixth_order():
    h = 0.05
    x = np.arange(0.0, 2.0, h)
    d1, d2 = central_derivatives(np.sin(x), h)
    xi = x[3:-3]
    assert np.max(np.abs(d1 - np.cos(xi))) < 1e-8
    assert np.max(np.abs(d2 + np.sin(xi))) < 1e-7
