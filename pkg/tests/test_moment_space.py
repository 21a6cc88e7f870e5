import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from scipy import linalg

from src.moments.errors import BoundaryError, DomainError, OrderError, ParityError
from src.moments.hankel_det import logdet_product
from src.moments.moment_space import (
    CanonicalCoords,
    IntervalKind,
    JacobiCoefficients,
    MomentVector,
    assemble_hankel,
    canonical_to_jacobi,
    canonical_to_moments,
    characteristic_polynomial,
    gauss_quadrature,
    is_interior,
    jacobi_matrix,
    ldl_pivots,
    moment_bounds,
    moments_to_canonical,
    polynomial_norms,
)
from src.moments.numeric import to_mpf
from src.stochastic.sampling import (
    HalflineParams,
    ReallineParams,
    beta_hermite_matrix,
    halfline_canonical_batch,
    realline_canonical_batch,
    unit_canonical_batch,
)

F = Fraction


# ===== exact examples =====

def test_arcsine_moments_from_half_coordinates():
    m = canonical_to_moments(CanonicalCoords(IntervalKind.UNIT, (F(1, 2), F(1, 2))))
    assert m.m == (F(1, 2), F(3, 8))


def test_arcsine_moments_back_to_half_coordinates():
    c = moments_to_canonical(MomentVector(IntervalKind.UNIT, (F(1, 2), F(3, 8), F(5, 16), F(35, 128))))
    assert c.values == (F(1, 2),) * 4


def test_exponential_moments_on_the_half_line():
    c = moments_to_canonical(MomentVector(IntervalKind.HALFLINE, (F(1), F(2), F(6))))
    assert c.values == (F(1), F(1), F(2))


def test_halfline_unit_coordinates_give_catalan_shifted_moments():
    m = canonical_to_moments(CanonicalCoords(IntervalKind.HALFLINE, (F(1), F(1))))
    assert m.m == (F(1), F(2))


def test_semicircle_moments_on_the_real_line():
    c = CanonicalCoords(IntervalKind.REALLINE, (F(0), F(1), F(0), F(1), F(0)))
    m = canonical_to_moments(c)
    assert m.m == (F(0), F(1), F(0), F(2), F(0))
    assert moments_to_canonical(m).values == c.values


# ===== ranges and boundary =====

def test_moment_bounds_empty_prefix():
    assert moment_bounds([], IntervalKind.UNIT) == (0.0, 1.0)
    assert moment_bounds([], IntervalKind.HALFLINE) == (0.0, np.inf)


def test_moment_bounds_second_moment():
    lower, upper = moment_bounds([F(1, 2)], IntervalKind.UNIT)
    assert (lower, upper) == (F(1, 4), F(1, 2))
    lower, upper = moment_bounds([F(1)], IntervalKind.HALFLINE)
    assert lower == F(1) and upper == np.inf


def test_moment_bounds_rejects_real_line():
    with pytest.raises(DomainError):
        moment_bounds([0.0], IntervalKind.REALLINE)


def test_boundary_vector_reports_its_order():
    with pytest.raises(BoundaryError) as info:
        moments_to_canonical(MomentVector(IntervalKind.UNIT, (F(1, 2), F(1, 4))))
    assert info.value.order == 2


def test_even_real_line_vector_is_a_parity_error():
    with pytest.raises(ParityError):
        moments_to_canonical(MomentVector(IntervalKind.REALLINE, (0.0, 1.0)))


def test_coordinates_validate_their_domain():
    with pytest.raises(DomainError):
        CanonicalCoords(IntervalKind.UNIT, (0.5, 1.0))
    with pytest.raises(DomainError):
        CanonicalCoords(IntervalKind.HALFLINE, (1.0, 0.0))
    with pytest.raises(ParityError):
        CanonicalCoords(IntervalKind.REALLINE, (0.0, 1.0))


# ===== interior test =====

def test_is_interior_on_examples():
    arcsine = canonical_to_moments(CanonicalCoords(IntervalKind.UNIT, (0.5,) * 6))
    assert is_interior(arcsine)
    assert not is_interior(MomentVector(IntervalKind.UNIT, (0.5, 0.25)))
    assert not is_interior(MomentVector(IntervalKind.UNIT, (0.5, 0.6)))
    assert is_interior(MomentVector(IntervalKind.HALFLINE, (1.0, 2.0, 6.0)))
    assert not is_interior(MomentVector(IntervalKind.HALFLINE, (1.0, 1.0)))
    assert is_interior(MomentVector(IntervalKind.REALLINE, (0.0, 1.0, 0.0)))


def test_ldl_pivots_of_arcsine_hankel():
    pivots = ldl_pivots([[F(1), F(1, 2)], [F(1, 2), F(3, 8)]])
    assert pivots == [F(1), F(1, 8)]


def test_assemble_hankel_needs_enough_moments():
    m = MomentVector(IntervalKind.UNIT, (0.5, 0.375, 0.3125))
    assert assemble_hankel(m, 1).shape == (2, 2)
    with pytest.raises(OrderError):
        assemble_hankel(m, 2)


# ===== round trips =====

def _sampled_float_coordinates(interval, rng, trials):
    """Rows drawn from the sampling laws, at N = 20 (19 on the real line)"""
    if interval is IntervalKind.UNIT:
        return unit_canonical_batch(rng, 21, trials, upto=20)
    if interval is IntervalKind.HALFLINE:
        return halfline_canonical_batch(rng, HalflineParams.unit_mean(20, [4.0] * 20), trials)
    return realline_canonical_batch(rng, ReallineParams.unit_mean(10, [2.0] * 9), trials)


@pytest.mark.parametrize("trials", [50, pytest.param(1000, marks=pytest.mark.slow)])
@pytest.mark.parametrize("interval", list(IntervalKind))
def test_float_moment_round_trip_at_order_twenty(interval, trials, rng):
    for row in _sampled_float_coordinates(interval, rng, trials):
        m = canonical_to_moments(CanonicalCoords(interval, tuple(float(v) for v in row)))
        assert all(isinstance(v, float) for v in m.m)
        back = canonical_to_moments(moments_to_canonical(m))
        got, want = np.asarray(back.m), np.asarray(m.m)
        if interval is IntervalKind.REALLINE:
            mags = np.abs(want)
            scale = np.array([mags[: k + 2].max() for k in range(mags.size)])
            assert np.all(np.abs(got - want) <= 1e-9 * scale)
        else:
            np.testing.assert_allclose(got, want, rtol=1e-9)


@pytest.mark.parametrize("interval, low, high, N", [
    (IntervalKind.UNIT, 0.3, 0.7, 10),
    (IntervalKind.HALFLINE, 0.8, 1.25, 8),
])
def test_float_coordinate_round_trip(interval, low, high, N, rng):
    for _ in range(20):
        c = CanonicalCoords(interval, tuple(rng.uniform(low, high, size=N)))
        back = moments_to_canonical(canonical_to_moments(c))
        np.testing.assert_allclose(back.values, c.values, rtol=1e-9)


def test_real_line_float_coordinate_round_trip(rng):
    for _ in range(20):
        values = []
        for j in range(9):
            values.append(rng.uniform(-0.5, 0.5) if j % 2 == 0 else rng.uniform(0.8, 1.25))
        c = CanonicalCoords(IntervalKind.REALLINE, tuple(values))
        back = moments_to_canonical(canonical_to_moments(c))
        np.testing.assert_allclose(back.values, c.values, rtol=1e-9, atol=1e-9)


def test_float_arcsine_vector_keeps_half_coordinates_at_order_twenty_four():
    # C(2k, k)/4^k is a double for k ≤ 24
    exact = tuple(math.comb(2 * k, k) / 4 ** k for k in range(1, 25))
    m = canonical_to_moments(CanonicalCoords(IntervalKind.UNIT, (0.5,) * 24))
    assert m.m == exact
    c = moments_to_canonical(MomentVector(IntervalKind.UNIT, exact))
    np.testing.assert_allclose(c.values, 0.5, rtol=1e-12)


def test_float_moment_range_at_order_twenty():
    prefix = [math.comb(2 * k, k) / 4 ** k for k in range(1, 20)]
    lower, upper = moment_bounds(prefix, IntervalKind.UNIT)
    assert isinstance(lower, float) and isinstance(upper, float)
    m20 = math.comb(40, 20) / 4 ** 20
    assert upper - lower == pytest.approx(4.0 ** -19, rel=1e-9)
    assert m20 - lower == pytest.approx(0.5 * 4.0 ** -19, rel=1e-9)


def test_extended_precision_round_trip_at_high_order(rng, high_precision):
    values = to_mpf(rng.uniform(0.2, 0.8, size=40))
    c = CanonicalCoords(IntervalKind.UNIT, values)
    m = canonical_to_moments(c)
    assert all(isinstance(v, mpmath.mpf) for v in m.m)
    back = moments_to_canonical(m)
    assert max(abs(a - b) for a, b in zip(back.values, values)) < mpmath.mpf(10) ** -20


def test_exact_moment_vector_json_round_trip():
    m = MomentVector(IntervalKind.UNIT, (F(1, 2), F(3, 8)))
    assert MomentVector.from_json(m.to_json()) == m


# ===== recurrence data =====

def test_gauss_quadrature_reproduces_moments():
    c = CanonicalCoords(IntervalKind.UNIT, (0.3, 0.6, 0.5, 0.4, 0.7, 0.2, 0.55))
    jacobi = canonical_to_jacobi(c)
    assert jacobi.n == 4 and len(jacobi.beta) == 3
    nodes, weights = gauss_quadrature(jacobi)
    assert weights.sum() == pytest.approx(1.0)
    assert np.all((nodes > 0) & (nodes < 1))
    m = canonical_to_moments(c).m
    for k, mk in enumerate(m, start=1):
        assert np.sum(weights * nodes ** k) == pytest.approx(mk, abs=1e-12)


def test_characteristic_polynomial_roots_are_the_nodes():
    jacobi = JacobiCoefficients(alpha=(0.1, -0.2, 0.3), beta=(1.0, 0.5))
    nodes, _ = gauss_quadrature(jacobi)
    roots = np.sort(characteristic_polynomial(jacobi).roots().real)
    np.testing.assert_allclose(roots, np.sort(nodes), atol=1e-10)


@pytest.mark.parametrize("beta", [1.0, 2.0, 4.0])
@pytest.mark.parametrize("n", [3, 7, 12])
def test_beta_hermite_characteristic_polynomial_two_ways(n, beta, rng):
    jacobi = beta_hermite_matrix(n, beta, rng)
    eigenvalues = linalg.eigvalsh(jacobi_matrix(jacobi))
    nodes, _ = gauss_quadrature(jacobi)
    np.testing.assert_allclose(np.sort(nodes), eigenvalues, rtol=1e-10, atol=1e-10)
    poly = characteristic_polynomial(jacobi)
    assert poly.degree() == n
    for x in (1.5j, 0.5 + 2j, -1.0 + 1j, 3.0 - 1.2j):
        want = np.prod(x - eigenvalues)
        assert abs(poly(x) - want) <= 1e-10 * abs(want)


def test_polynomial_norms_multiply_to_the_hankel_determinant():
    c = CanonicalCoords(IntervalKind.REALLINE, (0.3, 2.0, -0.1, 0.5, 0.2))
    norms = polynomial_norms(canonical_to_jacobi(c))
    np.testing.assert_allclose(norms, [1.0, 2.0, 1.0])
    assert np.log(np.prod(norms)) == pytest.approx(logdet_product(c, 2))


def test_jacobi_coefficients_validate():
    with pytest.raises(OrderError):
        JacobiCoefficients(alpha=(0.0,), beta=(1.0, 1.0))
    with pytest.raises(DomainError):
        JacobiCoefficients(alpha=(0.0, 0.0), beta=(-1.0,))
