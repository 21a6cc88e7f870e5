import numpy as np
import pytest
from scipy.special import logsumexp

from src.ldp.rate import (
    RateEval,
    Regime,
    TestFunction,
    exact_log_mgf,
    finite_n_cumulant,
    lambda_functional,
    lambda_t,
    lambda_t_quad,
    lambda_t_star,
    locate_threshold,
    nu_n_apply,
    nu_n_weights,
    nu_n_weights_batch,
    rate_fixed_k_canonical,
    rate_t1_closed,
    threshold_K,
    z_process,
)
from src.moments.errors import DomainError, OrderError
from src.moments.moment_space import CanonicalCoords, IntervalKind
from src.stochastic.sampling import sample_unit_canonical, unit_canonical_batch

LOG2 = np.log(2.0)


# ===== fixed time =====

def test_rate_at_one_in_closed_form():
    assert rate_t1_closed(1.0) == pytest.approx(0.306853, abs=1e-6)
    assert rate_t1_closed(0.5) == 0.0
    assert rate_t1_closed(0.0) == np.inf


@pytest.mark.parametrize("x", [0.05, 0.1, 0.25, 0.5, 1.0, 2.0, 5.0])
def test_legendre_transform_matches_closed_form_at_one(x):
    assert lambda_t_star(1.0, x) == pytest.approx(rate_t1_closed(x), abs=1e-6)


@pytest.mark.parametrize("t, lam", [(0.25, -2.0), (0.25, 4.0), (0.5, 1.0), (0.5, 3.0), (0.75, 2.0), (1.0, 1.5)])
def test_closed_form_matches_quadrature(t, lam):
    assert lambda_t(t, lam) == pytest.approx(lambda_t_quad(t, lam), abs=1e-8)


def test_cumulant_vanishes_at_zero():
    for t in (0.1, 0.5, 0.9, 1.0):
        assert lambda_t(t, 0.0) == pytest.approx(0.0, abs=1e-12)


def test_cumulant_is_infinite_past_the_pole():
    assert lambda_t(0.5, 4.5) == np.inf
    assert lambda_t(1.0, 2.0) == np.inf
    assert np.isfinite(lambda_t(0.5, 4.0))
    with pytest.raises(DomainError):
        lambda_t(0.0, 1.0)


def test_legendre_duality_at_interior_time():
    t, lam, h = 0.5, 1.0, 1e-5
    slope = (lambda_t(t, lam + h) - lambda_t(t, lam - h)) / (2 * h)
    assert lambda_t_star(t, slope) == pytest.approx(lam * slope - lambda_t(t, lam), abs=1e-6)


def test_legendre_transform_dominates_every_line():
    t, x = 0.5, 0.2
    star = lambda_t_star(t, x)
    for lam in (-3.0, -1.0, 0.0, 1.0, 3.0):
        assert star >= lam * x - lambda_t(t, lam) - 1e-9


def test_rate_is_infinite_for_nonpositive_levels():
    assert lambda_t_star(0.5, 0.0) == np.inf
    assert lambda_t_star(0.5, -1.0) == np.inf


# ===== Λ(f) =====

def test_constant_functions_by_regime():
    sub = lambda_functional(TestFunction.constant(1.0))
    assert sub.regime is Regime.SUBCRITICAL
    assert sub.value == pytest.approx(LOG2, abs=1e-8)
    assert lambda_functional(TestFunction.constant(3.0)).regime is Regime.SUPERCRITICAL
    boundary = lambda_functional(TestFunction.constant(2.0))
    assert boundary.regime is Regime.BOUNDARY and boundary.value is None


def test_indicator_reproduces_fixed_time_cumulant():
    t, lam = 0.5, 1.0
    rate = lambda_functional(TestFunction.indicator(t, lam))
    assert rate.value == pytest.approx(lambda_t(t, lam), abs=1e-8)


def test_threshold_of_an_indicator():
    assert threshold_K(TestFunction.indicator(0.5, 1.0)) == pytest.approx(0.5, abs=1e-9)


def test_threshold_scale_of_the_unit_constant():
    assert locate_threshold(TestFunction.constant(1.0)) == pytest.approx(2.0, abs=1e-6)


def test_locate_threshold_needs_a_crossing():
    with pytest.raises(DomainError):
        locate_threshold(TestFunction.constant(0.0), upper=10.0)


def test_rate_eval_invariants():
    with pytest.raises(DomainError):
        RateEval(1.0, Regime.SUPERCRITICAL, 3.0)
    with pytest.raises(DomainError):
        RateEval(0.5, Regime.BOUNDARY, 2.0)
    assert RateEval(np.inf, Regime.SUPERCRITICAL, 3.0).to_dict()["value"] == "inf"


# ===== test functions =====

def test_test_function_presets_and_json():
    f = TestFunction.from_spec("[[0.5, 1.0], [1.0, 0.0]]")
    g = TestFunction.from_spec("indicator:0.5")
    for x in (0.0, 0.25, 0.5, 0.75, 1.0):
        assert f(x) == g(x)
    assert TestFunction.from_spec("const:1.5")(0.3) == 1.5


def test_test_function_rejects_bad_input():
    with pytest.raises(DomainError):
        TestFunction.from_spec("not json")
    with pytest.raises(DomainError):
        TestFunction.piecewise((0.0, 0.6, 0.4, 1.0), (1.0, 2.0, 3.0))
    with pytest.raises(DomainError):
        TestFunction(lambda x: 2.0, sup_norm_bound=1.0)
    with pytest.raises(DomainError):
        TestFunction.indicator(0.0)


def test_tail_integral_of_piecewise_function():
    f = TestFunction.piecewise((0.0, 0.5, 1.0), (2.0, -1.0))
    assert f.tail_integral(0.25, 1e-10) == pytest.approx(2.0 * 0.25 - 0.5)
    assert f.right_limit == -1.0


# ===== ν_n =====

def test_nu_n_cumulative_weights_equal_z_process(rng):
    n = 10
    c = sample_unit_canonical(2 * n, rng)
    atoms, weights = nu_n_weights(c, n)
    np.testing.assert_allclose(atoms, np.arange(1, n + 1) / n)
    np.testing.assert_allclose(np.cumsum(weights), z_process(c, n, atoms), atol=1e-12)


def test_nu_n_needs_unit_coordinates_and_enough_of_them():
    with pytest.raises(DomainError):
        nu_n_weights(CanonicalCoords(IntervalKind.HALFLINE, (1.0, 1.0)), 1)
    with pytest.raises(OrderError):
        nu_n_weights_batch(np.full((1, 3), 0.5), 2)


def test_arcsine_coordinates_put_no_mass_on_nu_n():
    n = 6
    c = CanonicalCoords(IntervalKind.UNIT, (0.5,) * (2 * n))
    _, weights = nu_n_weights(c, n)
    np.testing.assert_allclose(weights, 0.0, atol=1e-15)


# ===== exact cumulants =====

def test_exact_log_mgf_of_zero_function():
    assert exact_log_mgf(TestFunction.constant(0.0), 5) == pytest.approx(0.0, abs=1e-12)


def test_exact_log_mgf_diverges_for_large_functions():
    assert exact_log_mgf(TestFunction.constant(5.0), 5) == np.inf


def test_exact_log_mgf_matches_simulation(rng):
    n, reps = 5, 200_000
    f = TestFunction.constant(-0.5)
    weights = nu_n_weights_batch(unit_canonical_batch(rng, 2 * n, reps), n)
    values = n * nu_n_apply(f, weights, n)
    mc = logsumexp(values) - np.log(reps)
    assert mc == pytest.approx(exact_log_mgf(f, n), abs=0.02)


@pytest.mark.parametrize("lam", [-1.0, 0.5])
def test_finite_n_cumulant_approaches_the_limit(lam):
    f = TestFunction.constant(lam)
    target = lambda_functional(f).value
    assert target == pytest.approx(lambda_t(1.0, lam), abs=1e-8)
    gaps = [abs(finite_n_cumulant(f, n) - target) for n in (50, 100, 200)]
    assert gaps[0] >= gaps[1] >= gaps[2]
    assert gaps[2] < 0.05


def test_finite_n_cumulant_diverges_at_one():
    # the last coordinate is uniform and E[1/p] = ∞
    assert finite_n_cumulant(TestFunction.constant(1.0), 50) == np.inf


# ===== fixed k =====

def test_fixed_k_rate():
    assert rate_fixed_k_canonical([0.5] * 4) == pytest.approx(0.0, abs=1e-14)
    assert rate_fixed_k_canonical([0.25, 0.5]) == pytest.approx(2 * np.log(4 / 3))
    assert rate_fixed_k_canonical([0.0, 0.5]) == np.inf
