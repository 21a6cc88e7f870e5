from fractions import Fraction

import numpy as np
import pytest

from src.moments.errors import DomainError, OrderError, PivotError
from src.moments.hankel_det import (
    HankelLogDet,
    Method,
    arcsine_centering,
    grid_orders,
    logdet_direct,
    logdet_layers,
    logdet_process,
    logdet_product,
    reference_centering,
)
from src.moments.moment_space import (
    CanonicalCoords,
    IntervalKind,
    MomentVector,
    canonical_to_moments,
)
from src.stochastic.sampling import (
    HalflineParams,
    ReallineParams,
    sample_halfline_canonical,
    sample_realline_canonical,
    sample_unit_canonical,
)


def test_arcsine_second_order_determinant():
    m = MomentVector(IntervalKind.UNIT, (0.5, 0.375))
    assert logdet_direct(m, 1) == pytest.approx(np.log(1 / 8))
    assert arcsine_centering(1) == pytest.approx(np.log(1 / 8))


def test_arcsine_path_matches_centering():
    c = CanonicalCoords(IntervalKind.UNIT, (0.5,) * 100)
    for k in range(51):
        assert logdet_product(c, k) == pytest.approx(arcsine_centering(k), rel=1e-12, abs=1e-12)
    np.testing.assert_allclose(logdet_layers(np.full((1, 100), 0.5), IntervalKind.UNIT)[0],
                               arcsine_centering(np.arange(51)), rtol=1e-12, atol=1e-12)


@pytest.mark.parametrize("position", [0, 1, 2])
def test_logdet_diverges_as_a_coordinate_reaches_the_boundary(position):
    def logdet_with(p):
        values = [0.5] * 6
        values[position] = p
        return logdet_product(CanonicalCoords(IntervalKind.UNIT, tuple(values)), 2)

    for eps in (1e-3, 1e-6, 1e-12):
        assert logdet_with(eps) < logdet_with(10 * eps)
        assert logdet_with(1 - eps) < logdet_with(1 - 10 * eps)
    assert logdet_with(1e-12) < -25
    assert logdet_with(1 - 1e-12) < -25


def test_reference_centering_is_zero_off_the_unit_interval():
    assert reference_centering(IntervalKind.HALFLINE, 3) == 0.0
    np.testing.assert_array_equal(reference_centering(IntervalKind.REALLINE, np.arange(4)), np.zeros(4))


def test_exact_product_equals_exact_direct():
    c = CanonicalCoords(IntervalKind.HALFLINE, (Fraction(1, 2), Fraction(3), Fraction(2, 3), Fraction(5, 4)))
    m = canonical_to_moments(c)
    assert logdet_direct(m, 2) == pytest.approx(logdet_product(c, 2), abs=1e-12)


@pytest.mark.parametrize("interval", list(IntervalKind))
def test_product_route_agrees_with_direct_route(interval, rng):
    if interval is IntervalKind.UNIT:
        c = sample_unit_canonical(8, rng)
    elif interval is IntervalKind.HALFLINE:
        c = sample_halfline_canonical(HalflineParams.unit_mean(8), rng)
    else:
        c = sample_realline_canonical(ReallineParams.unit_mean(5), rng)
    m = canonical_to_moments(c)
    for k in range(1, 5):
        assert logdet_direct(m, k) == pytest.approx(logdet_product(c, k), rel=1e-6, abs=1e-6)


@pytest.mark.parametrize("interval", list(IntervalKind))
def test_batch_layers_match_row_by_row(interval, rng):
    if interval is IntervalKind.UNIT:
        rows = [sample_unit_canonical(10, rng) for _ in range(4)]
    elif interval is IntervalKind.HALFLINE:
        rows = [sample_halfline_canonical(HalflineParams.unit_mean(10), rng) for _ in range(4)]
    else:
        rows = [sample_realline_canonical(ReallineParams.unit_mean(6), rng) for _ in range(4)]
    values = np.array([[float(v) for v in c.values] for c in rows])
    paths = logdet_layers(values, interval)
    assert paths.shape == (4, 6) and np.all(paths[:, 0] == 0)
    for row, c in zip(paths, rows):
        for k in range(6):
            assert row[k] == pytest.approx(logdet_product(c, k), abs=1e-10)


def test_grid_orders_survive_representation_error():
    assert grid_orders(100, [0.29])[0] == 29
    np.testing.assert_array_equal(grid_orders(10, [0.0, 0.3, 1.0]), [0, 3, 10])


def test_process_uses_n_minus_one_on_the_real_line(rng):
    c = sample_realline_canonical(ReallineParams.unit_mean(11), rng)
    path = logdet_process(c, 11, [0.5, 1.0])
    assert path.k == (5, 10)
    assert path.grid == (0.5, 1.0)


def test_process_frame_columns(rng):
    c = sample_unit_canonical(20, rng)
    frame = logdet_process(c, 10, np.linspace(0, 1, 11)).to_frame()
    assert list(frame.columns) == ["t", "k", "logdet", "centered_logdet"]
    assert len(frame) == 11
    assert frame["logdet"].iloc[0] == 0.0


def test_process_beyond_available_layers(rng):
    c = sample_unit_canonical(6, rng)
    with pytest.raises(OrderError):
        logdet_process(c, 10, [1.0])


def test_boundary_vector_raises_pivot_error():
    with pytest.raises(PivotError) as info:
        logdet_direct(MomentVector(IntervalKind.UNIT, (0.5, 0.25)), 1)
    assert info.value.index == 1


def test_product_needs_enough_coordinates():
    with pytest.raises(OrderError):
        logdet_product(CanonicalCoords(IntervalKind.UNIT, (0.5, 0.5, 0.5)), 2)


def test_logdet_record_rejects_nonzero_h0():
    with pytest.raises(DomainError):
        HankelLogDet(IntervalKind.UNIT, Method.DIRECT, (0,), (0.1,))
