# src/stochastic/limit_theory.py

"""
Gaussian limits of log-Hankel-determinant processes
Drift r(t), covariance kernels f and g, the fixed-k covariance Σ_k, grid
discretizations with Cholesky factors, and the standardized processes built
from sampled coordinates.
"""

from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence, Union

import numpy as np
from loguru import logger
from scipy import integrate, linalg, special

from src.config.settings import settings
from src.moments.errors import DomainError, FactorizationError
from src.moments.hankel_det import grid_orders, logdet_layers, reference_centering
from src.moments.moment_space import CanonicalCoords, IntervalKind
from src.stochastic.sampling import HalflineParams, Params, ReallineParams, SeedSpec


class KernelId(str, Enum):
    F_UNIT = "f_unit"
    G_HALFLINE = "g_halfline"
    G_HALF_REALLINE = "g_half_realline"


def _check_unit_interval(name: str, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if np.any(x < 0) or np.any(x > 1) or np.any(np.isnan(x)):
        raise DomainError(f"{name} must lie in [0, 1], got {x}")
    return x


# =====================================================================
# DRIFT AND KERNELS (0·log 0 = 0)
# =====================================================================

def r(t):
    """r(t) = t + (1 − t) log(1 − t)"""
    t = _check_unit_interval("t", t)
    value = t + special.xlogy(1.0 - t, 1.0 - t)
    return float(value) if value.ndim == 0 else value


def _f_closed(s: np.ndarray, t: np.ndarray) -> np.ndarray:
    lo, hi = np.minimum(s, t), np.maximum(s, t)
    return lo * (2.0 - hi) - special.xlogy(s + t - 2.0, 1.0 - lo)


def _g_closed(s: np.ndarray, t: np.ndarray) -> np.ndarray:
    lo, hi = np.minimum(s, t), np.maximum(s, t)
    return 0.5 * lo * (s + t - 2.0 + hi) - special.xlogy((s - 1.0) * (t - 1.0), 1.0 - lo)


def kernel_f(s: float, t: float) -> float:
    """f(s,t) = ∫_0^{s∧t} (t−x)(s−x)/(1−x)² dx"""
    s, t = _check_unit_interval("s", s), _check_unit_interval("t", t)
    return float(_f_closed(s, t))


def kernel_g(s: float, t: float) -> float:
    """g(s,t) = ∫_0^{s∧t} (t−x)(s−x)/(1−x) dx"""
    s, t = _check_unit_interval("s", s), _check_unit_interval("t", t)
    return float(_g_closed(s, t))


def kernel_quadrature(kernel: str, s: float, t: float) -> float:
    """Integral form of f or g by adaptive quadrature"""
    power = {"f": 2, "g": 1}[kernel]
    upper = min(s, t)
    if upper == 0:
        return 0.0
    value, _ = integrate.quad(lambda x: (t - x) * (s - x) / (1.0 - x) ** power, 0.0, upper,
                              epsabs=1e-13, epsrel=1e-12, limit=200)
    return value


def sigma_fixed_k(k: int) -> np.ndarray:
    """Σ_k = (i ∧ j)_{i,j=1..k}"""
    if k < 1:
        raise DomainError(f"k must be positive, got {k}")
    idx = np.arange(1, k + 1)
    return np.minimum.outer(idx, idx).astype(float)


# =====================================================================
# LIMIT SPECIFICATIONS AND GRIDS
# =====================================================================

# (mean_scale, cov_scale)
_LIMIT_SCALES = {
    IntervalKind.UNIT: (0.0, 1.0),
    IntervalKind.HALFLINE: (-0.5, 1.0),
    IntervalKind.REALLINE: (-0.25, 0.5),
}


@dataclass(frozen=True)
class LimitSpec:
    """Mean mean_scale·r(t), covariance cov_scale·kernel(s,t)"""

    interval: IntervalKind
    mean_scale: float
    cov_scale: float

    def __post_init__(self):
        object.__setattr__(self, "interval", IntervalKind(self.interval))
        expected = _LIMIT_SCALES[self.interval]
        if (self.mean_scale, self.cov_scale) != expected:
            raise DomainError(
                f"{self.interval.value} limit has mean scale {expected[0]} "
                f"and covariance scale {expected[1]}"
            )

    @classmethod
    def for_interval(cls, interval: IntervalKind) -> "LimitSpec":
        interval = IntervalKind(interval)
        return cls(interval, *_LIMIT_SCALES[interval])

    @property
    def kernel_id(self) -> KernelId:
        return {
            IntervalKind.UNIT: KernelId.F_UNIT,
            IntervalKind.HALFLINE: KernelId.G_HALFLINE,
            IntervalKind.REALLINE: KernelId.G_HALF_REALLINE,
        }[self.interval]

    def mean(self, grid) -> np.ndarray:
        return self.mean_scale * np.asarray(r(grid), dtype=float)

    def covariance(self, s, t) -> np.ndarray:
        closed = _f_closed if self.interval is IntervalKind.UNIT else _g_closed
        return self.cov_scale * closed(np.asarray(s, dtype=float), np.asarray(t, dtype=float))


@dataclass(frozen=True)
class KernelGrid:
    """Gram matrix of a limit kernel on a grid with its (jittered) Cholesky factor"""

    grid: np.ndarray
    gram: np.ndarray
    kernel_id: KernelId
    chol: np.ndarray
    jitter: float

    @property
    def residual(self) -> float:
        if self.gram.size == 0:
            return 0.0
        return float(np.max(np.abs(self.chol @ self.chol.T - self.gram)))


def validate_grid(grid: Sequence[float]) -> np.ndarray:
    grid = _check_unit_interval("grid", grid).ravel()
    if grid.size > 1 and np.any(np.diff(grid) <= 0):
        raise DomainError("grid must be strictly increasing")
    return grid


def build_kernel_grid(spec: LimitSpec, grid: Sequence[float]) -> KernelGrid:
    """
    Gram matrix cov_scale · kernel(t_i, t_j) and a lower Cholesky factor

    Diagonal jitter escalates by decades from jitter_start to jitter_max
    when the plain factorization fails.
    """
    grid = validate_grid(grid)
    S, T = np.meshgrid(grid, grid, indexing="ij")
    gram = spec.covariance(S, T)
    gram = 0.5 * (gram + gram.T)
    if grid.size == 0:
        return KernelGrid(grid, gram, spec.kernel_id, gram.copy(), 0.0)

    candidates = [0.0]
    level = settings.jitter_start
    while level <= settings.jitter_max * (1 + 1e-9):
        candidates.append(level)
        level *= 10.0
    for jitter in candidates:
        try:
            chol = linalg.cholesky(gram + jitter * np.eye(grid.size), lower=True)
        except linalg.LinAlgError:
            logger.debug(f"cholesky failed with jitter {jitter:g}")
            continue
        kg = KernelGrid(grid, gram, spec.kernel_id, chol, jitter)
        if kg.residual <= 1e-8:
            if jitter:
                logger.debug(f"{spec.kernel_id.value} gram factorized with jitter {jitter:g}")
            return kg
    raise FactorizationError(
        f"{spec.kernel_id.value} gram on {grid.size} points is not factorizable "
        f"up to jitter {settings.jitter_max:g} (duplicate points?)"
    )


def sample_limit_paths(spec: LimitSpec, grid: Sequence[float], n_paths: int,
                       seed: Union[SeedSpec, np.random.Generator]) -> np.ndarray:
    """Rows mean_scale·r(t_j) + (L ξ)_j with ξ standard normal"""
    kg = build_kernel_grid(spec, grid)
    if n_paths <= 0:
        return np.empty((0, kg.grid.size))
    rng = seed if isinstance(seed, np.random.Generator) else seed.generator()
    xi = rng.standard_normal((n_paths, kg.grid.size))
    return spec.mean(kg.grid)[None, :] + xi @ kg.chol.T


# =====================================================================
# STANDARDIZED PROCESSES
# =====================================================================

def process_orders(interval: IntervalKind, n: int, grid: Sequence[float]) -> np.ndarray:
    """⌊nt⌋, or ⌊(n−1)t⌋ on the real line"""
    scale = n - 1 if IntervalKind(interval) is IntervalKind.REALLINE else n
    return grid_orders(scale, grid)


def standardize_paths(interval: IntervalKind, paths: np.ndarray, n: int,
                      grid: Sequence[float]) -> np.ndarray:
    """
    Standardize log-determinant paths (reps, K+1) on a grid

    [0,1]: (2/√n)(D − D⁰ + (n/2) r(t)); [0,∞) and ℝ: D/n.
    """
    interval = IntervalKind(interval)
    grid = _check_unit_interval("grid", grid).ravel()
    ks = process_orders(interval, n, grid)
    D = np.atleast_2d(paths)[:, ks]
    if interval is IntervalKind.UNIT:
        centering = reference_centering(interval, ks)
        return (2.0 / np.sqrt(n)) * (D - centering[None, :] + 0.5 * n * r(grid)[None, :])
    return D / n


def standardized_process(interval: IntervalKind, c: CanonicalCoords, n: int,
                         grid: Sequence[float]) -> np.ndarray:
    """Standardized path of one coordinate vector over the grid"""
    interval = IntervalKind(interval)
    if c.interval is not interval:
        raise DomainError(f"coordinates are {c.interval.value}, not {interval.value}")
    paths = logdet_layers(np.asarray([float(v) for v in c.values])[None, :], interval)
    ks = process_orders(interval, n, grid)
    if ks.size and ks.max() >= paths.shape[1]:
        raise DomainError(f"{c.N} coordinates do not reach order {int(ks.max())}")
    return standardize_paths(interval, paths, n, grid)[0]


# =====================================================================
# FINITE-n EXPECTATIONS
# =====================================================================

def expected_logdet_path(interval: IntervalKind, K: int, N: Optional[int] = None,
                         params: Params = None) -> np.ndarray:
    """
    Exact E[D_{2k}] for k = 0..K from digamma means of the coordinate logs

    [0,1] needs N (uniform law on M_N); the other intervals need params.
    """
    interval = IntervalKind(interval)
    if K < 0:
        raise DomainError(f"K must be nonnegative, got {K}")
    if interval is IntervalKind.UNIT:
        if N is None or 2 * K > N:
            raise DomainError(f"order {K} needs N ≥ {2 * K}, got {N}")
        a = N - np.arange(1, 2 * K + 1) + 1.0
        elog = special.digamma(a) - special.digamma(2.0 * a)  # E log p = E log q
        layers = 2.0 * elog[0::2] + elog[1::2]
        layers[1:] += elog[1:-1:2]
    elif interval is IntervalKind.HALFLINE:
        if not isinstance(params, HalflineParams) or 2 * K > params.n:
            raise DomainError(f"order {K} needs half-line parameters with n ≥ {2 * K}")
        elog = special.digamma(params.shapes[: 2 * K]) - np.log(params.rates[: 2 * K])
        layers = elog[0::2] + elog[1::2]
    else:
        if not isinstance(params, ReallineParams) or K > params.n - 1:
            raise DomainError(f"order {K} needs real-line parameters with n > {K}")
        layers = special.digamma(params.shapes[:K]) - np.log(params.rates[:K])
    return np.concatenate([[0.0], np.cumsum(np.cumsum(layers))])


def expected_standardized(interval: IntervalKind, n: int, grid: Sequence[float],
                          N: Optional[int] = None, params: Params = None) -> np.ndarray:
    """Exact finite-n mean of the standardized process (standardization is affine)"""
    ks = process_orders(interval, n, grid)
    K = int(ks.max()) if ks.size else 0
    path = expected_logdet_path(interval, K, N=N, params=params)
    return standardize_paths(interval, path[None, :], n, grid)[0]
