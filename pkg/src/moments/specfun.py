"""
Scalar special functions: log-gamma, digamma/trigamma, normal CDF and the
exact log-moments of Beta and Gamma laws
"""
from enum import IntEnum
from typing import Tuple

import numpy as np
from scipy import special

from src.moments.errors import DomainError


class PolygammaOrder(IntEnum):
    """Supported polygamma orders"""
    DIGAMMA = 0
    TRIGAMMA = 1


def _require_positive(name: str, x: float) -> float:
    x = float(x)
    if not x > 0:
        raise DomainError(f"{name} must be positive, got {x}")
    return x


def log_gamma(x: float) -> float:
    """log Γ(x) for x > 0"""
    x = _require_positive("x", x)
    return float(special.gammaln(x))


def log_beta(a: float, b: float) -> float:
    """log B(a, b) for a, b > 0"""
    a = _require_positive("a", a)
    b = _require_positive("b", b)
    return float(special.betaln(a, b))


def polygamma(order: int, x: float) -> float:
    """ψ(x) for order 0, ψ₁(x) for order 1"""
    try:
        order = PolygammaOrder(order)
    except ValueError:
        raise DomainError(f"polygamma order must be 0 or 1, got {order}") from None
    x = _require_positive("x", x)
    if order is PolygammaOrder.DIGAMMA:
        return float(special.digamma(x))
    return float(special.polygamma(1, x))


def digamma(x: float) -> float:
    return polygamma(PolygammaOrder.DIGAMMA, x)


def trigamma(x: float) -> float:
    return polygamma(PolygammaOrder.TRIGAMMA, x)


def beta_log_moments(a: float, b: float) -> Tuple[float, float]:
    """
    Mean and variance of log X for X ~ Beta(a, b)

    Returns:
        (ψ(a) − ψ(a+b), ψ₁(a) − ψ₁(a+b))
    """
    a = _require_positive("a", a)
    b = _require_positive("b", b)
    mean = digamma(a) - digamma(a + b)
    variance = trigamma(a) - trigamma(a + b)
    return mean, variance


def beta_logpq_moments(a: float) -> Tuple[float, float]:
    """
    Mean and variance of log(X(1−X)) for X ~ Beta(a, a)

    Cov(log X, log(1−X)) = −ψ₁(2a), hence the variance 2ψ₁(a) − 4ψ₁(2a).
    """
    a = _require_positive("a", a)
    mean = 2.0 * (digamma(a) - digamma(2.0 * a))
    variance = 2.0 * trigamma(a) - 4.0 * trigamma(2.0 * a)
    return mean, variance


def gamma_log_moments(k: float) -> Tuple[float, float, float]:
    """
    Log-moments of X ~ Gamma(k, 1)

    Returns:
        (E[log X], Var(log X), fourth central moment), the latter as its
        leading term 3·Var².
    """
    k = _require_positive("k", k)
    mean = digamma(k)
    variance = trigamma(k)
    return mean, variance, 3.0 * variance ** 2


def std_normal_cdf(x: float) -> float:
    """Φ(x)"""
    return float(special.ndtr(np.float64(x)))


def layer_pair_log_moments(m: int) -> Tuple[float, float]:
    """
    Exact mean and variance of log(p q) + log(p' q') with p ~ Beta(2m−1, 2m−1)
    and p' ~ Beta(2m, 2m) independent (one layer pair of a uniform moment
    vector, m = n − i + 1)
    """
    if m < 1:
        raise DomainError(f"m must be a positive integer, got {m}")
    mean_a, var_a = beta_logpq_moments(2 * m - 1)
    mean_b, var_b = beta_logpq_moments(2 * m)
    return mean_a + mean_b, var_a + var_b


def layer_pair_expansion(m: int) -> Tuple[float, float]:
    """Leading terms of layer_pair_log_moments: (−4 log 2 − 1/(2m), 1/(4m²))"""
    m = _require_positive("m", m)
    return -4.0 * np.log(2.0) - 1.0 / (2.0 * m), 1.0 / (4.0 * m * m)


def gamma_log_expansion(k: float) -> Tuple[float, float, float]:
    """Large-k terms of gamma_log_moments: (log k − 1/(2k), 1/k + 1/(2k²), 3/k²)"""
    k = _require_positive("k", k)
    return float(np.log(k) - 0.5 / k), 1.0 / k + 0.5 / k ** 2, 3.0 / k ** 2


def beta_variance(a: float, b: float) -> float:
    """Var X = ab / ((a+b)²(a+b+1)) for X ~ Beta(a, b)"""
    a = _require_positive("a", a)
    b = _require_positive("b", b)
    return a * b / ((a + b) ** 2 * (a + b + 1.0))
