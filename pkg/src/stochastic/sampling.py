# src/stochastic/sampling.py

"""
Seed-reproducible samplers for random moment sequences
Canonical coordinates are drawn from their independent laws (Beta on [0,1],
Gamma on [0,∞), Normal/Gamma on ℝ) and pushed through the inverse moment map.
"""

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple, Union

import numpy as np
from loguru import logger
from scipy import special, stats

from src.moments.errors import ParameterError
from src.moments.moment_space import (
    CanonicalCoords,
    IntervalKind,
    JacobiCoefficients,
    MomentVector,
    canonical_to_moments,
    moments_to_canonical,
)
from src.moments.numeric import extended_precision, to_mpf

UINT64_LIMIT = 2 ** 64


# =====================================================================
# RNG STREAMS
# =====================================================================

@dataclass(frozen=True)
class SeedSpec:
    """(seed, stream_id) names one independent PCG64 stream"""

    seed: int
    stream_id: int = 0

    def __post_init__(self):
        for name in ("seed", "stream_id"):
            value = getattr(self, name)
            if not 0 <= int(value) < UINT64_LIMIT:
                raise ParameterError(f"{name} must be a 64-bit unsigned integer, got {value}")

    def generator(self) -> np.random.Generator:
        sequence = np.random.SeedSequence(entropy=int(self.seed), spawn_key=(int(self.stream_id),))
        return np.random.Generator(np.random.PCG64(sequence))

    def stream(self, stream_id: int) -> "SeedSpec":
        return SeedSpec(seed=self.seed, stream_id=stream_id)


def _rng(seed: Union[SeedSpec, np.random.Generator]) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else seed.generator()


# =====================================================================
# PARAMETER BLOCKS
# =====================================================================

@dataclass(frozen=True)
class HalflineParams:
    """z_k ~ Gamma(shape γ_k + n − k + 1, rate δ_k), k = 1..n"""

    n: int
    gamma: Tuple[float, ...]
    delta: Tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "gamma", tuple(float(g) for g in self.gamma))
        object.__setattr__(self, "delta", tuple(float(d) for d in self.delta))
        if self.n < 1 or len(self.gamma) != self.n or len(self.delta) != self.n:
            raise ParameterError(f"need n ≥ 1 and n values of gamma and delta (n={self.n})")
        for k, (g, d) in enumerate(zip(self.gamma, self.delta), start=1):
            if not g > -(self.n - k + 1):
                raise ParameterError(f"gamma_{k} = {g} must exceed {-(self.n - k + 1)}")
            if not d > 0:
                raise ParameterError(f"delta_{k} = {d} must be positive")

    @property
    def shapes(self) -> np.ndarray:
        k = np.arange(1, self.n + 1)
        return np.asarray(self.gamma) + self.n - k + 1

    @property
    def rates(self) -> np.ndarray:
        return np.asarray(self.delta)

    @classmethod
    def unit_mean(cls, n: int, gamma: Optional[Sequence[float]] = None) -> "HalflineParams":
        """δ_k = n − k + 1 + γ_k, so every z_k has mean 1"""
        gamma = tuple(gamma) if gamma is not None else (0.0,) * n
        delta = tuple(n - k + 1 + g for k, g in enumerate(gamma, start=1))
        return cls(n=n, gamma=gamma, delta=delta)


@dataclass(frozen=True)
class ReallineParams:
    """b_k ~ N(0, 1/(2δ_{2k−1})), a_k ~ Gamma(γ_k + 2n − 2k, rate δ_{2k})"""

    n: int
    gamma: Tuple[float, ...]
    delta: Tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "gamma", tuple(float(g) for g in self.gamma))
        object.__setattr__(self, "delta", tuple(float(d) for d in self.delta))
        if self.n < 1 or len(self.gamma) != self.n - 1 or len(self.delta) != 2 * self.n - 1:
            raise ParameterError(
                f"need n ≥ 1, n−1 gamma and 2n−1 delta values (n={self.n}, "
                f"got {len(self.gamma)} and {len(self.delta)})"
            )
        for k, g in enumerate(self.gamma, start=1):
            if not g > -2 * (self.n - k):
                raise ParameterError(f"gamma_{k} = {g} must exceed {-2 * (self.n - k)}")
        for i, d in enumerate(self.delta, start=1):
            if not d > 0:
                raise ParameterError(f"delta_{i} = {d} must be positive")

    @property
    def shapes(self) -> np.ndarray:
        k = np.arange(1, self.n)
        return np.asarray(self.gamma) + 2 * self.n - 2 * k

    @property
    def rates(self) -> np.ndarray:
        return np.asarray(self.delta[1::2])

    @property
    def normal_scales(self) -> np.ndarray:
        return np.sqrt(1.0 / (2.0 * np.asarray(self.delta[0::2])))

    @classmethod
    def unit_mean(cls, n: int, gamma: Optional[Sequence[float]] = None) -> "ReallineParams":
        """δ_{2k} = 2n − 2k + γ_k (mean-one a_k); δ_{2k−1} = 1/2 (standard normal b_k)"""
        gamma = tuple(gamma) if gamma is not None else (0.0,) * (n - 1)
        delta = []
        for k in range(1, n + 1):
            delta.append(0.5)
            if k < n:
                delta.append(2 * n - 2 * k + gamma[k - 1])
        return cls(n=n, gamma=gamma, delta=tuple(delta))

    @classmethod
    def beta_hermite(cls, n: int, beta: float) -> "ReallineParams":
        """δ_{2k−1} = 1/2, δ_{2k} = 1, γ_k = (β/2 − 2)(n − k): a_k ~ ½χ²_{β(n−k)}"""
        if not beta > 0:
            raise ParameterError(f"beta must be positive, got {beta}")
        gamma = tuple((beta / 2.0 - 2.0) * (n - k) for k in range(1, n))
        delta = tuple(0.5 if i % 2 == 1 else 1.0 for i in range(1, 2 * n))
        return cls(n=n, gamma=gamma, delta=delta)


Params = Union[None, HalflineParams, ReallineParams]


# =====================================================================
# BATCH SAMPLERS (rows are replicates)
# =====================================================================

def beta_symmetric(rng: np.random.Generator, a: np.ndarray, size: int) -> np.ndarray:
    """Beta(a, a) columns as X/(X+Y) with X, Y ~ Gamma(a, 1)"""
    x = rng.gamma(a, 1.0, size=(size, len(a)))
    y = rng.gamma(a, 1.0, size=(size, len(a)))
    return x / (x + y)


def unit_canonical_batch(rng: np.random.Generator, N: int, size: int,
                         upto: Optional[int] = None) -> np.ndarray:
    """p_i ~ Beta(N−i+1, N−i+1) for i = 1..upto (default N)"""
    upto = N if upto is None else min(upto, N)
    shapes = N - np.arange(1, upto + 1) + 1.0
    return beta_symmetric(rng, shapes, size)


def halfline_canonical_batch(rng: np.random.Generator, params: HalflineParams, size: int,
                             upto: Optional[int] = None) -> np.ndarray:
    upto = params.n if upto is None else min(upto, params.n)
    shapes, rates = params.shapes[:upto], params.rates[:upto]
    return rng.gamma(shapes, 1.0 / rates, size=(size, upto))


def realline_canonical_batch(rng: np.random.Generator, params: ReallineParams, size: int) -> np.ndarray:
    """Interleaved (b_1, a_1, …, b_n)"""
    n = params.n
    out = np.empty((size, 2 * n - 1))
    out[:, 0::2] = rng.normal(0.0, params.normal_scales, size=(size, n))
    if n > 1:
        out[:, 1::2] = rng.gamma(params.shapes, 1.0 / params.rates, size=(size, n - 1))
    return out


# =====================================================================
# SINGLE DRAWS
# =====================================================================

def sample_unit_canonical(N: int, seed: Union[SeedSpec, np.random.Generator]) -> CanonicalCoords:
    """Canonical coordinates of a uniform vector on M_N([0,1])"""
    if N < 1:
        raise ParameterError(f"N must be positive, got {N}")
    p = unit_canonical_batch(_rng(seed), N, 1)[0]
    return CanonicalCoords(IntervalKind.UNIT, tuple(p))


def sample_halfline_canonical(params: HalflineParams,
                              seed: Union[SeedSpec, np.random.Generator]) -> CanonicalCoords:
    z = halfline_canonical_batch(_rng(seed), params, 1)[0]
    return CanonicalCoords(IntervalKind.HALFLINE, tuple(z))


def sample_realline_canonical(params: ReallineParams,
                              seed: Union[SeedSpec, np.random.Generator]) -> CanonicalCoords:
    values = realline_canonical_batch(_rng(seed), params, 1)[0]
    return CanonicalCoords(IntervalKind.REALLINE, tuple(values))


def beta_hermite_matrix(n: int, beta: float, seed: Union[SeedSpec, np.random.Generator]) -> JacobiCoefficients:
    """Gaussian diagonal b_i ~ N(0,1) and off-diagonal products a_i ~ ½χ²_{β(n−i)}"""
    c = sample_realline_canonical(ReallineParams.beta_hermite(n, beta), seed)
    return JacobiCoefficients(alpha=c.b, beta=c.a)


def sample_moment_vector(interval: IntervalKind, N: Optional[int], params: Params,
                         seed: Union[SeedSpec, np.random.Generator],
                         dps: Optional[int] = None) -> MomentVector:
    """
    Random moment vector: canonical draw followed by the inverse map

    With `dps` the inverse map runs in mpmath at that many digits.
    """
    interval = IntervalKind(interval)
    if interval is IntervalKind.UNIT:
        if N is None:
            raise ParameterError("uniform sampling on [0,1] needs the number of moments N")
        c = sample_unit_canonical(N, seed)
    elif interval is IntervalKind.HALFLINE:
        if not isinstance(params, HalflineParams) or (N is not None and N != params.n):
            raise ParameterError("half-line sampling needs HalflineParams with n = N")
        c = sample_halfline_canonical(params, seed)
    else:
        if not isinstance(params, ReallineParams) or (N is not None and N != 2 * params.n - 1):
            raise ParameterError("real-line sampling needs ReallineParams with 2n − 1 = N")
        c = sample_realline_canonical(params, seed)
    if dps is None:
        return canonical_to_moments(c)
    with extended_precision(dps):
        return canonical_to_moments(CanonicalCoords(c.interval, to_mpf(c.values)))


# =====================================================================
# DENSITIES ON THE MOMENT SPACES
# =====================================================================

def unit_log_volume(N: int) -> float:
    """log vol M_N([0,1]) = Σ_i log B(N−i+1, N−i+1)"""
    shapes = N - np.arange(1, N + 1) + 1.0
    return float(np.sum(special.betaln(shapes, shapes)))


def log_density_unit(m: MomentVector) -> float:
    """Uniform log-density on M_N([0,1]) (−∞ off the interior)"""
    try:
        moments_to_canonical(m)
    except ValueError:
        return -np.inf
    return -unit_log_volume(m.N)


def unit_canonical_log_density(c: CanonicalCoords) -> float:
    """Joint Beta log-density of the canonical coordinates of a uniform vector"""
    p = np.asarray([float(v) for v in c.p])
    shapes = c.N - np.arange(1, c.N + 1) + 1.0
    return float(np.sum(stats.beta.logpdf(p, shapes, shapes)))


def log_density_halfline(m: MomentVector, params: HalflineParams) -> float:
    """log g_n: log c_n + Σ γ_k log z_k − δ_k z_k"""
    try:
        z = np.asarray([float(v) for v in moments_to_canonical(m).z])
    except ValueError:
        return -np.inf
    shapes, rates = params.shapes, params.rates
    log_norm = np.sum(shapes * np.log(rates) - special.gammaln(shapes))
    return float(log_norm + np.sum(np.asarray(params.gamma) * np.log(z) - rates * z))


def log_density_realline(m: MomentVector, params: ReallineParams) -> float:
    """log h_{2n−1}: Gaussian factors in b, Gamma-type factors in a"""
    try:
        c = moments_to_canonical(m)
    except ValueError:
        return -np.inf
    b = np.asarray([float(v) for v in c.b])
    a = np.asarray([float(v) for v in c.a])
    delta_odd = np.asarray(params.delta[0::2])
    gaussian = np.sum(0.5 * np.log(delta_odd / np.pi) - delta_odd * b ** 2)
    shapes, rates = params.shapes, params.rates
    gamma_part = np.sum(shapes * np.log(rates) - special.gammaln(shapes)
                        + np.asarray(params.gamma) * np.log(a) - rates * a)
    logger.trace(f"realline density: gaussian {gaussian}, gamma {gamma_part}")
    return float(gaussian + gamma_part)
