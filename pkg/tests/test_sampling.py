import mpmath
import numpy as np
import pytest
from scipy import integrate, stats

from src.moments.errors import ParameterError
from src.moments.moment_space import CanonicalCoords, IntervalKind, MomentVector, moments_to_canonical
from src.stochastic.sampling import (
    HalflineParams,
    ReallineParams,
    SeedSpec,
    beta_hermite_matrix,
    beta_symmetric,
    halfline_canonical_batch,
    log_density_halfline,
    log_density_realline,
    log_density_unit,
    realline_canonical_batch,
    sample_moment_vector,
    sample_unit_canonical,
    unit_canonical_batch,
    unit_canonical_log_density,
    unit_log_volume,
)


# ===== streams =====

def test_same_seed_and_stream_reproduce():
    a = sample_unit_canonical(10, SeedSpec(seed=42, stream_id=3))
    b = sample_unit_canonical(10, SeedSpec(seed=42, stream_id=3))
    assert a == b


def test_streams_are_distinct():
    a = sample_unit_canonical(10, SeedSpec(seed=42, stream_id=0))
    b = sample_unit_canonical(10, SeedSpec(seed=42, stream_id=1))
    assert a != b


def test_streams_are_uncorrelated():
    size = 20_000
    a = unit_canonical_batch(SeedSpec(seed=42, stream_id=0).generator(), 4, size)
    b = unit_canonical_batch(SeedSpec(seed=42, stream_id=1).generator(), 4, size)
    cross = np.corrcoef(a.T, b.T)[:4, 4:]
    assert np.all(np.abs(cross) < 4 / np.sqrt(size))


def test_seed_must_fit_in_64_bits():
    with pytest.raises(ParameterError):
        SeedSpec(seed=-1)
    with pytest.raises(ParameterError):
        SeedSpec(seed=2 ** 64)
    SeedSpec(seed=2 ** 64 - 1)


# ===== parameters =====

def test_halfline_parameter_checks():
    with pytest.raises(ParameterError):
        HalflineParams(n=2, gamma=(0.0,), delta=(1.0, 1.0))
    with pytest.raises(ParameterError):
        HalflineParams(n=2, gamma=(0.0, -1.0), delta=(1.0, 1.0))
    with pytest.raises(ParameterError):
        HalflineParams(n=2, gamma=(0.0, 0.0), delta=(1.0, 0.0))


def test_halfline_unit_mean_rates():
    params = HalflineParams.unit_mean(4, [0.5] * 4)
    np.testing.assert_allclose(params.shapes, [4.5, 3.5, 2.5, 1.5])
    np.testing.assert_allclose(params.shapes / params.rates, 1.0)


def test_realline_parameter_checks():
    with pytest.raises(ParameterError):
        ReallineParams(n=3, gamma=(0.0,), delta=(0.5,) * 5)
    with pytest.raises(ParameterError):
        ReallineParams(n=2, gamma=(-2.0,), delta=(0.5, 1.0, 0.5))


def test_beta_hermite_shapes():
    params = ReallineParams.beta_hermite(5, 2.0)
    np.testing.assert_allclose(params.shapes, [4, 3, 2, 1])
    np.testing.assert_allclose(params.rates, 1.0)
    np.testing.assert_allclose(params.normal_scales, 1.0)
    with pytest.raises(ParameterError):
        ReallineParams.beta_hermite(5, 0.0)


def test_beta_hermite_matrix_has_the_right_size(rng):
    jacobi = beta_hermite_matrix(6, 1.0, rng)
    assert jacobi.n == 6 and len(jacobi.beta) == 5


# ===== batch laws =====

def test_beta_symmetric_moments(rng):
    x = beta_symmetric(rng, np.array([3.0]), 200_000)[:, 0]
    assert x.mean() == pytest.approx(0.5, abs=0.003)
    assert x.var() == pytest.approx(1 / 28, rel=0.02)


def test_unit_batch_shapes(rng):
    batch = unit_canonical_batch(rng, 20, 50_000, upto=3)
    assert batch.shape == (50_000, 3)
    np.testing.assert_allclose(batch.var(axis=0), [1 / (4 * 41), 1 / (4 * 39), 1 / (4 * 37)], rtol=0.05)


def test_halfline_batch_means(rng):
    params = HalflineParams.unit_mean(6)
    batch = halfline_canonical_batch(rng, params, 50_000)
    np.testing.assert_allclose(batch.mean(axis=0), 1.0, atol=0.02)


def test_realline_batch_layout(rng):
    params = ReallineParams.unit_mean(4)
    batch = realline_canonical_batch(rng, params, 50_000)
    assert batch.shape == (50_000, 7)
    np.testing.assert_allclose(batch[:, 0::2].var(axis=0), 1.0, rtol=0.05)
    np.testing.assert_allclose(batch[:, 1::2].mean(axis=0), 1.0, atol=0.02)
    assert np.all(batch[:, 1::2] > 0)


@pytest.mark.parametrize("column", [0, 4, 9])
def test_unit_coordinates_are_beta_distributed(column, rng):
    N = 10
    x = unit_canonical_batch(rng, N, 5_000)[:, column]
    shape = N - column
    assert stats.kstest(x, stats.beta(shape, shape).cdf).pvalue > 1e-4


@pytest.mark.parametrize("column", [0, 3, 5])
def test_halfline_coordinates_are_gamma_distributed(column, rng):
    params = HalflineParams.unit_mean(6, [0.5] * 6)
    z = halfline_canonical_batch(rng, params, 5_000)[:, column]
    law = stats.gamma(params.shapes[column], scale=1.0 / params.rates[column])
    assert stats.kstest(z, law.cdf).pvalue > 1e-4


def test_realline_coordinates_are_normal_and_gamma(rng):
    params = ReallineParams.beta_hermite(5, 2.0)
    batch = realline_canonical_batch(rng, params, 5_000)
    for i in range(params.n):
        law = stats.norm(0.0, params.normal_scales[i])
        assert stats.kstest(batch[:, 2 * i], law.cdf).pvalue > 1e-4
    for i in range(params.n - 1):
        law = stats.gamma(params.shapes[i], scale=1.0 / params.rates[i])
        assert stats.kstest(batch[:, 2 * i + 1], law.cdf).pvalue > 1e-4


# ===== moment vectors =====

@pytest.mark.parametrize("interval, N, params", [
    (IntervalKind.UNIT, 8, None),
    (IntervalKind.HALFLINE, 6, HalflineParams.unit_mean(6)),
    (IntervalKind.REALLINE, 7, ReallineParams.unit_mean(4)),
])
def test_sampled_vectors_are_interior(interval, N, params):
    m = sample_moment_vector(interval, N, params, SeedSpec(seed=5))
    assert m.N == N and m.interval is interval
    assert moments_to_canonical(m).N == N


def test_sampler_rejects_mismatched_params():
    with pytest.raises(ParameterError):
        sample_moment_vector(IntervalKind.HALFLINE, 5, HalflineParams.unit_mean(6), SeedSpec(seed=1))
    with pytest.raises(ParameterError):
        sample_moment_vector(IntervalKind.REALLINE, 6, ReallineParams.unit_mean(3), SeedSpec(seed=1))
    with pytest.raises(ParameterError):
        sample_moment_vector(IntervalKind.UNIT, 0, None, SeedSpec(seed=1))
    with pytest.raises(ParameterError):
        sample_moment_vector(IntervalKind.UNIT, None, None, SeedSpec(seed=1))


def _lens_cell_area(x0, x1, y0, y1):
    """Area of {m_1 in (x0, x1), max(m_1², y0) < m_2 < min(m_1, y1)}"""
    def height(x):
        return max(0.0, min(x, y1) - max(x * x, y0))
    kinks = [v for v in (np.sqrt(y0), np.sqrt(y1), y0, y1) if x0 < v < x1]
    return integrate.quad(height, x0, x1, points=kinks or None, limit=200)[0]


def test_second_order_vectors_fill_the_lens_uniformly(rng):
    size, bins = 4_000, 4
    m = np.array([sample_moment_vector(IntervalKind.UNIT, 2, None, rng).m for _ in range(size)])
    assert np.all((m[:, 0] ** 2 < m[:, 1]) & (m[:, 1] < m[:, 0]))
    edges = np.linspace(0.0, 1.0, bins + 1)
    observed, _, _ = np.histogram2d(m[:, 0], m[:, 1], bins=[edges, edges])
    area = np.array([[_lens_cell_area(edges[i], edges[i + 1], edges[j], edges[j + 1])
                      for j in range(bins)] for i in range(bins)])
    assert area.sum() == pytest.approx(1 / 6, rel=1e-8)
    expected = size * area / area.sum()
    assert observed[expected == 0].sum() == 0
    big = expected >= 5
    small = (expected > 0) & ~big
    obs, exp = observed[big], expected[big]
    if small.any():
        obs = np.append(obs, observed[small].sum())
        exp = np.append(exp, expected[small].sum())
    assert stats.chisquare(obs, exp).pvalue > 1e-4


def test_extended_precision_sampling():
    m = sample_moment_vector(IntervalKind.UNIT, 30, None, SeedSpec(seed=9), dps=50)
    assert all(isinstance(v, mpmath.mpf) for v in m.m)


# ===== densities =====

def test_unit_log_volume_of_second_order_space():
    assert unit_log_volume(2) == pytest.approx(np.log(1 / 6))
    assert unit_log_volume(1) == pytest.approx(0.0)


def test_unit_density_is_flat_inside_and_zero_outside():
    inside = MomentVector(IntervalKind.UNIT, (0.5, 0.3))
    assert log_density_unit(inside) == pytest.approx(np.log(6))
    assert log_density_unit(MomentVector(IntervalKind.UNIT, (0.5, 0.2))) == -np.inf


def test_unit_canonical_density():
    c = CanonicalCoords(IntervalKind.UNIT, (0.3, 0.6))
    assert unit_canonical_log_density(c) == pytest.approx(stats.beta.logpdf(0.3, 2, 2))


def test_first_order_halfline_density_is_gamma():
    params = HalflineParams(n=1, gamma=(0.7,), delta=(2.5,))
    z = 0.8
    got = log_density_halfline(MomentVector(IntervalKind.HALFLINE, (z,)), params)
    assert got == pytest.approx(stats.gamma.logpdf(z, 1.7, scale=1 / 2.5))


def test_first_order_realline_density_is_normal():
    params = ReallineParams(n=1, gamma=(), delta=(3.0,))
    b = -0.4
    got = log_density_realline(MomentVector(IntervalKind.REALLINE, (b,)), params)
    assert got == pytest.approx(stats.norm.logpdf(b, 0.0, np.sqrt(1 / 6.0)))
