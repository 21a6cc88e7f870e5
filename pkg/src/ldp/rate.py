# src/ldp/rate.py

"""
Large-deviation functionals for uniform moment vectors on [0,1]
The random measure ν_n, the cumulant functional Λ(f) and its K-threshold,
the fixed-time pair Λ_t / Λ*_t, the closed-form rate at t = 1 and the
fixed-k canonical rate.
"""

import json
import warnings
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
from loguru import logger
from scipy import integrate, optimize, special

from src.config.settings import settings
from src.moments.errors import DomainError, OrderError, QuadratureError
from src.moments.hankel_det import arcsine_centering, logdet_process
from src.moments.moment_space import CanonicalCoords, IntervalKind

LOG2 = float(np.log(2.0))
CRITICAL_K = 2.0  # Λ(f) is finite below K = 2, infinite above
K_SCAN_POINTS = 1001
K_SCAN_END = 1.0 - 1e-6
SUP_GRID_POINTS = 10_000


class Regime(str, Enum):
    SUBCRITICAL = "subcritical"
    SUPERCRITICAL = "supercritical"
    BOUNDARY = "boundary"


@dataclass(frozen=True)
class RateEval:
    """
    Λ(f) with its regime; BOUNDARY carries no value

    value is +∞ in the supercritical regime and None on the boundary band.
    """

    value: Optional[float]
    regime: Regime
    K: float

    def __post_init__(self):
        if self.regime is Regime.SUPERCRITICAL and self.value != np.inf:
            raise DomainError("supercritical evaluations must carry +inf")
        if self.regime is Regime.BOUNDARY and self.value is not None:
            raise DomainError("boundary evaluations carry no value")

    def to_dict(self) -> dict:
        value = self.value
        if value is not None and not np.isfinite(value):
            value = "inf"
        return {"value": value, "regime": self.regime.value, "K": self.K}


# =====================================================================
# TEST FUNCTIONS
# =====================================================================

class TestFunction:
    """
    Bounded test function on [0,1]

    Piecewise-constant functions keep their pieces (right-closed intervals
    (b_{i−1}, b_i] with f(0) = v_1) so that tail integrals are exact.
    """

    __test__ = False  # not a pytest class

    def __init__(self, evaluator: Callable[[float], float], sup_norm_bound: float,
                 pieces: Optional[Tuple[Tuple[float, ...], Tuple[float, ...]]] = None,
                 label: str = "f"):
        self.evaluator = evaluator
        self.sup_norm_bound = float(sup_norm_bound)
        self.pieces = pieces
        self.label = label
        grid = np.linspace(0.0, 1.0, SUP_GRID_POINTS)
        worst = max(abs(float(evaluator(x))) for x in grid)
        if worst > self.sup_norm_bound * (1 + 1e-12):
            raise DomainError(f"{label}: |f| reaches {worst} above the bound {self.sup_norm_bound}")

    def __call__(self, x: float) -> float:
        return float(self.evaluator(x))

    def __repr__(self) -> str:
        return f"TestFunction({self.label})"

    # ---------- constructors ----------

    @classmethod
    def piecewise(cls, breakpoints: Sequence[float], values: Sequence[float],
                  label: Optional[str] = None) -> "TestFunction":
        """Values v_i on (b_{i−1}, b_i] for breakpoints 0 = b_0 < … < b_m = 1"""
        b = tuple(float(x) for x in breakpoints)
        v = tuple(float(x) for x in values)
        if len(b) != len(v) + 1 or b[0] != 0.0 or b[-1] != 1.0 or any(np.diff(b) <= 0):
            raise DomainError(f"invalid piecewise spec: breakpoints {b}, values {v}")

        def evaluator(x: float) -> float:
            i = int(np.searchsorted(b, x, side="left"))
            return v[max(i, 1) - 1]

        bound = max(abs(x) for x in v)
        return cls(evaluator, bound, pieces=(b, v), label=label or f"piecewise{v}")

    @classmethod
    def constant(cls, c: float) -> "TestFunction":
        return cls.piecewise((0.0, 1.0), (c,), label=f"const:{c:g}")

    @classmethod
    def indicator(cls, t: float, height: float = 1.0) -> "TestFunction":
        """height · 1{x ≤ t}"""
        if not 0 < t <= 1:
            raise DomainError(f"indicator cut must be in (0, 1], got {t}")
        if t == 1.0:
            return cls.piecewise((0.0, 1.0), (height,), label=f"indicator:{t:g}")
        return cls.piecewise((0.0, t, 1.0), (height, 0.0), label=f"indicator:{t:g}")

    @classmethod
    def from_spec(cls, spec: str) -> "TestFunction":
        """Presets "const:c" and "indicator:t", or a JSON list of [right_breakpoint, value] pairs"""
        spec = spec.strip()
        if spec.startswith("const:"):
            return cls.constant(float(spec.split(":", 1)[1]))
        if spec.startswith("indicator:"):
            return cls.indicator(float(spec.split(":", 1)[1]))
        try:
            pairs = json.loads(spec)
            breakpoints = [0.0] + [float(b) for b, _ in pairs]
            values = [float(v) for _, v in pairs]
        except (ValueError, TypeError) as exc:
            raise DomainError(f"cannot parse test function {spec!r}: {exc}") from exc
        return cls.piecewise(breakpoints, values)

    def scaled(self, c: float) -> "TestFunction":
        if self.pieces is not None:
            b, v = self.pieces
            return TestFunction.piecewise(b, [c * x for x in v], label=f"{c:g}·{self.label}")
        return TestFunction(lambda x: c * self.evaluator(x), abs(c) * self.sup_norm_bound,
                            label=f"{c:g}·{self.label}")

    # ---------- integrals ----------

    @property
    def right_limit(self) -> float:
        """f(1⁻)"""
        if self.pieces is not None:
            return self.pieces[1][-1]
        return self(1.0 - 1e-9)

    def tail_integral(self, x: float, quad_tol: float) -> float:
        """G(x) = ∫_x^1 f(t) dt"""
        if self.pieces is not None:
            b, v = self.pieces
            total = 0.0
            for lo, hi, value in zip(b[:-1], b[1:], v):
                if hi > x:
                    total += value * (hi - max(lo, x))
            return total
        return _quad(self.evaluator, x, 1.0, quad_tol)

    def tail_ratio(self, x: float, quad_tol: float) -> float:
        """G(x)/(1−x), exact near 1 for piecewise-constant f"""
        if self.pieces is not None:
            b, v = self.pieces
            total = 0.0
            for lo, hi, value in zip(b[:-1], b[1:], v):
                if hi > x:
                    total += value * (hi - max(lo, x)) / (1.0 - x)
            return total
        return self.tail_integral(x, quad_tol) / (1.0 - x)

    def breakpoints(self) -> Sequence[float]:
        if self.pieces is None:
            return []
        return list(self.pieces[0][1:-1])


def _quad(func, a: float, b: float, tol: float, points=None) -> float:
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            value, _ = integrate.quad(func, a, b, epsabs=tol, epsrel=tol, limit=500,
                                      points=points or None)
        except integrate.IntegrationWarning as exc:
            raise QuadratureError(f"quadrature on [{a}, {b}] did not converge: {exc}") from exc
    return float(value)


# =====================================================================
# THE RANDOM MEASURE ν_n
# =====================================================================

def nu_n_weights_batch(p: np.ndarray, n: int) -> np.ndarray:
    """
    Weights of ν_n at the atoms i/n for rows of canonical coordinates

    w_i = −(1/n)[Σ_{j≤i} log(4 q_{2j−1} p_{2j−1}) + Σ_{j<i} log(4 q_{2j} p_{2j}) + log(2 p_{2i})]
    """
    p = np.atleast_2d(np.asarray(p, dtype=float))
    if p.shape[1] < 2 * n:
        raise OrderError(f"ν_n needs {2 * n} coordinates, have {p.shape[1]}")
    p = p[:, : 2 * n]
    logpq = np.log(4.0 * p) + np.log1p(-p)
    odd = np.cumsum(logpq[:, 0::2], axis=1)
    even = np.cumsum(logpq[:, 1::2], axis=1)
    even_before = np.concatenate([np.zeros((p.shape[0], 1)), even[:, :-1]], axis=1)
    bracket = odd + even_before + np.log(2.0 * p[:, 1::2])
    return -bracket / n


def nu_n_weights(c: CanonicalCoords, n: int) -> Tuple[np.ndarray, np.ndarray]:
    """(atoms i/n, weights) of ν_n"""
    if c.interval is not IntervalKind.UNIT:
        raise DomainError("ν_n is defined for [0,1] coordinates")
    weights = nu_n_weights_batch(np.asarray([float(v) for v in c.values]), n)[0]
    return np.arange(1, n + 1) / n, weights


def nu_n_apply(f: TestFunction, weights: np.ndarray, n: int) -> np.ndarray:
    """ν_n(f) = Σ_i w_i f(i/n) for weight rows"""
    values = np.array([f(i / n) for i in range(1, n + 1)])
    return np.atleast_2d(weights) @ values


def z_process(c: CanonicalCoords, n: int, grid: Sequence[float]) -> np.ndarray:
    """Z_n(t) = −(1/n)(D_{2⌊nt⌋} − D⁰_{2⌊nt⌋})"""
    path = logdet_process(c, n, grid)
    return -(np.asarray(path.values) - arcsine_centering(np.asarray(path.k))) / n


# =====================================================================
# Λ(f) AND THE K-THRESHOLD
# =====================================================================

def threshold_K(f: TestFunction, quad_tol: Optional[float] = None) -> float:
    """
    K = sup_{x∈[0,1)} G(x)/(1−x)

    Grid scan of [0, 1−1e−6], golden-section refinement around the best
    grid point, then the right-end limit f(1⁻). For discontinuous f the
    result is only as fine as the scan.
    """
    tol = settings.quad_tol if quad_tol is None else quad_tol
    xs = np.linspace(0.0, K_SCAN_END, K_SCAN_POINTS)
    ratios = np.array([f.tail_ratio(x, tol) for x in xs])
    i = int(np.argmax(ratios))
    best = float(ratios[i])
    lo, hi = xs[max(i - 1, 0)], xs[min(i + 1, xs.size - 1)]
    if hi > lo:
        res = optimize.minimize_scalar(lambda x: -f.tail_ratio(x, tol), bounds=(lo, hi),
                                       method="bounded", options={"xatol": 1e-12})
        best = max(best, -float(res.fun))
    return max(best, f.right_limit)


def lambda_functional(f: TestFunction, quad_tol: Optional[float] = None) -> RateEval:
    """
    Λ(f) = −∫_0^1 log(1 − G(x)/(2(1−x))) dx below the threshold K = 2

    +∞ above it; BOUNDARY (no value) within boundary_band of 2.
    """
    tol = settings.quad_tol if quad_tol is None else quad_tol
    band = settings.boundary_band
    K = threshold_K(f, tol)
    if K > CRITICAL_K + band:
        return RateEval(np.inf, Regime.SUPERCRITICAL, K)
    if abs(K - CRITICAL_K) <= band:
        logger.info(f"{f.label}: K = {K} inside the boundary band, no value reported")
        return RateEval(None, Regime.BOUNDARY, K)

    def integrand(x: float) -> float:
        return -np.log1p(-0.5 * f.tail_ratio(x, tol))

    if f.pieces is not None:
        value = _quad(integrand, 0.0, 1.0, tol, points=f.breakpoints())
    else:
        delta = 1.0 - K_SCAN_END
        value = _quad(integrand, 0.0, K_SCAN_END, tol)
        value += -delta * np.log1p(-0.5 * f.right_limit)
    return RateEval(float(value), Regime.SUBCRITICAL, K)


def locate_threshold(f: TestFunction, upper: float = 1e6, tol: float = 1e-9) -> float:
    """Scale c* at which K(c·f) crosses 2"""
    if threshold_K(f.scaled(upper)) <= CRITICAL_K:
        raise DomainError(f"K({upper:g}·{f.label}) stays below 2")
    return optimize.brentq(lambda c: threshold_K(f.scaled(c)) - CRITICAL_K, 0.0, upper, xtol=tol)


# =====================================================================
# FIXED TIME: Λ_t AND Λ*_t
# =====================================================================

def _phi(X: float) -> float:
    return float(special.xlogy(X, X) - X)


def lambda_t(t: float, lam: float) -> float:
    """
    Λ_t(λ) = −∫_0^t log(1 − λ(t−y)/(2(1−y))) dy

    In closed form after u = 1 − y. +∞ for λ > 2/t; at λ = 2/t the limit
    from below (finite for t < 1, +∞ for t = 1).
    """
    if not 0 < t <= 1:
        raise DomainError(f"t must lie in (0, 1], got {t}")
    if lam * t > 2.0:
        return np.inf
    if t == 1.0:
        return np.inf if lam >= 2.0 else float(-np.log1p(-0.5 * lam))

    X0 = 2.0 * (1.0 - t)
    X1 = 2.0 - lam * t
    ratio = (X1 - X0) / X0
    if abs(ratio) > 0.5:
        slope = (_phi(X1) - _phi(X0)) / (X1 - X0)
    elif ratio == 0.0:
        slope = float(np.log(X1))
    else:
        slope = float(np.log(X1) + np.log1p(ratio) / ratio - 1.0)
    log_part = t * slope
    g_part = (LOG2 - 1.0) - (special.xlogy(1.0 - t, X0) - (1.0 - t))
    return float(-(log_part - g_part))


def lambda_t_quad(t: float, lam: float, quad_tol: Optional[float] = None) -> float:
    """Λ_t by direct quadrature (reference for the closed form)"""
    tol = settings.quad_tol if quad_tol is None else quad_tol
    if lam * t >= 2.0:
        return lambda_t(t, lam)
    return -_quad(lambda y: np.log1p(-lam * (t - y) / (2.0 * (1.0 - y))), 0.0, t, tol)


def lambda_t_star(t: float, x: float, tol: float = 1e-10) -> float:
    """
    Λ*_t(x) = sup_{λ ≤ 2/t} {λx − Λ_t(λ)}

    Bounded golden-section/Brent search with a lower bracket that grows by
    decades while the maximizer sits on it. +∞ for x ≤ 0.
    """
    if not 0 < t <= 1:
        raise DomainError(f"t must lie in (0, 1], got {t}")
    if x <= 0:
        return np.inf

    def negative_objective(lam: float) -> float:
        value = lambda_t(t, lam)
        if not np.isfinite(value):
            return 1e300
        return value - lam * x

    hi = 2.0 / t
    lo = -1.0
    while True:
        res = optimize.minimize_scalar(negative_objective, bounds=(lo, hi), method="bounded",
                                       options={"xatol": tol, "maxiter": 2000})
        if res.x > lo + 1e-6 * abs(lo):
            break
        if lo < -1e15:
            logger.debug(f"Λ*_{t}({x}): lower bracket overflow, treating as divergent")
            return np.inf
        lo *= 10.0
        logger.trace(f"Λ*_{t}({x}): expanding lower bracket to {lo:g}")
    return max(0.0, -float(res.fun))


def rate_t1_closed(x: float) -> float:
    """I(x) = 2x − 1 − log(2x) for x > 0, +∞ otherwise"""
    if x <= 0:
        return np.inf
    return float(2.0 * x - 1.0 - np.log(2.0 * x))


def rate_fixed_k_canonical(x: Sequence[float]) -> float:
    """I(x) = 2 Σ_i (−log(x_i − x_i²) − log 4) on (0,1)^{2k}"""
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0) or np.any(x >= 1):
        return np.inf
    return float(2.0 * np.sum(-np.log(x) - np.log1p(-x) - 2.0 * LOG2))


# =====================================================================
# EXACT FINITE-n CUMULANTS
# =====================================================================

def exact_log_mgf(f: TestFunction, n: int) -> float:
    """
    log E[exp(n ν_n(f))] for a uniform vector on M_{2n}([0,1])

    Factorizes over the independent Beta(2n−i+1, 2n−i+1) coordinates:
    p_{2j−1}, q_{2j−1} carry exponent x_j = −Σ_{i≥j} f(i/n); p_{2j} carries
    x_j and q_{2j} carries y_j = −Σ_{i>j} f(i/n); the constants contribute
    (3x_j + y_j) log 2. +∞ when a Beta moment diverges.
    """
    if n < 1:
        raise DomainError(f"n must be positive, got {n}")
    fv = np.array([f(i / n) for i in range(1, n + 1)])
    tail = np.cumsum(fv[::-1])[::-1]
    x = -tail
    y = -(tail - fv)
    j = np.arange(1, n + 1)
    a_odd = 2 * n - 2 * j + 2.0
    a_even = 2 * n - 2 * j + 1.0
    if np.any(a_odd + x <= 0) or np.any(a_even + x <= 0) or np.any(a_even + y <= 0):
        return np.inf
    total = np.sum(special.betaln(a_odd + x, a_odd + x) - special.betaln(a_odd, a_odd))
    total += np.sum(special.betaln(a_even + x, a_even + y) - special.betaln(a_even, a_even))
    total += np.sum(3.0 * x + y) * LOG2
    return float(total)


def finite_n_cumulant(f: TestFunction, n: int) -> float:
    """(1/n) log E[exp(n ν_n(f))]"""
    return exact_log_mgf(f, n) / n
