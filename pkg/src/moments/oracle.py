# src/moments/oracle.py

"""
Exact rational oracle
A small, self-contained rational-arithmetic version of the moment maps and
determinant identities. It shares no code with moment_space's transforms so
that agreement between the two is evidence, not tautology.
"""

from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Optional, Sequence

import numpy as np
from loguru import logger

from src.moments.moment_space import CanonicalCoords, IntervalKind, MomentVector
from src.stochastic.sampling import SeedSpec

MAX_DENOMINATOR = 64
MAX_ORDER = 8


# =====================================================================
# DETERMINANTS
# =====================================================================

def _as_fraction_matrix(matrix) -> np.ndarray:
    a = np.array([[Fraction(v) for v in row] for row in matrix], dtype=object)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    return a


def exact_det(matrix) -> Fraction:
    """Bareiss fraction-free elimination with row swaps"""
    a = _as_fraction_matrix(matrix)
    n = a.shape[0]
    if n == 0:
        return Fraction(1)
    sign = 1
    prev = Fraction(1)
    for k in range(n - 1):
        if a[k, k] == 0:
            swap = next((i for i in range(k + 1, n) if a[i, k] != 0), None)
            if swap is None:
                return Fraction(0)
            a[[k, swap]] = a[[swap, k]]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                a[i, j] = (a[i, j] * a[k, k] - a[i, k] * a[k, j]) / prev
        prev = a[k, k]
    return sign * a[n - 1, n - 1]


def cofactor_det(matrix) -> Fraction:
    """Laplace expansion along the first row (small sizes only)"""
    a = _as_fraction_matrix(matrix)
    n = a.shape[0]
    if n == 0:
        return Fraction(1)
    if n == 1:
        return a[0, 0]
    total = Fraction(0)
    for j in range(n):
        if a[0, j] == 0:
            continue
        minor = np.delete(np.delete(a, 0, axis=0), j, axis=1)
        total += (-1) ** j * a[0, j] * cofactor_det(minor)
    return total


def exact_hankel(moments: Sequence[Fraction], k: int, shift: int = 0) -> np.ndarray:
    """(m_{i+j+shift})_{i,j=0..k} from (m_0, m_1, …)"""
    return np.array([[moments[i + j + shift] for j in range(k + 1)] for i in range(k + 1)], dtype=object)


# =====================================================================
# EXACT MOMENT MAP
# =====================================================================

def _exact_recurrence(interval: IntervalKind, values: Sequence[Fraction]):
    values = [Fraction(v) for v in values]
    if interval is IntervalKind.REALLINE:
        return values[0::2], values[1::2]
    if interval is IntervalKind.UNIT:
        chain, q = [], Fraction(1)
        for p in values:
            chain.append(q * p)
            q = 1 - p
    else:
        chain = list(values)
    chain = chain + [Fraction(0)] * (len(chain) + 2)
    size = len(values) // 2 + 1
    alpha = [chain[0]] + [chain[2 * i - 1] + chain[2 * i] for i in range(1, size)]
    beta = [chain[2 * i - 2] * chain[2 * i - 1] for i in range(1, size)]
    return alpha, beta


def _exact_moments(interval: IntervalKind, values: Sequence[Fraction], N: int) -> List[Fraction]:
    """(m_0, …, m_N) as top-left entries of powers of the Jacobi operator"""
    alpha, beta = _exact_recurrence(interval, values)
    size = N // 2 + 1
    alpha = (list(alpha) + [Fraction(0)] * size)[:size]
    beta = (list(beta) + [Fraction(0)] * size)[: size - 1]
    T = np.full((size, size), Fraction(0), dtype=object)
    for i in range(size):
        T[i, i] = alpha[i]
        if i + 1 < size:
            T[i, i + 1] = beta[i]
            T[i + 1, i] = Fraction(1)
    power = np.full((size, size), Fraction(0), dtype=object)
    for i in range(size):
        power[i, i] = Fraction(1)
    moments = [Fraction(1)]
    for _ in range(N):
        power = power @ T
        moments.append(power[0, 0])
    return moments


def exact_canonical_to_moments(c: CanonicalCoords) -> MomentVector:
    """Rational moments (m_1, …, m_N) of rational canonical coordinates"""
    values = [Fraction(v) for v in c.values]
    return MomentVector(c.interval, tuple(_exact_moments(c.interval, values, len(values))[1:]))


def exact_lower_bound(interval: IntervalKind, values: Sequence[Fraction]) -> Fraction:
    """m_k^− for the canonical prefix `values` (length k−1)"""
    extended = [Fraction(v) for v in values] + [Fraction(0)]
    return _exact_moments(interval, extended, len(extended))[-1]


# =====================================================================
# PRODUCT FORMULAS
# =====================================================================

def exact_product_det(interval: IntervalKind, values: Sequence[Fraction], k: int) -> Fraction:
    """det H̲_{2k} from canonical coordinates"""
    v = [Fraction(x) for x in values]
    det = Fraction(1)
    for j in range(1, k + 1):
        if interval is IntervalKind.REALLINE:
            layer = v[2 * j - 1]
        elif interval is IntervalKind.HALFLINE:
            layer = v[2 * j - 2] * v[2 * j - 1]
        else:
            layer = v[2 * j - 2] * (1 - v[2 * j - 2]) * v[2 * j - 1]
            if j > 1:
                layer *= 1 - v[2 * j - 3]
        det *= layer ** (k - j + 1)
    return det


def literal_halfline_product(values: Sequence[Fraction], k: int) -> Fraction:
    """The half-line product with the layer index frozen at k: ∏_j (z_{2k−1} z_{2k})^{k−j+1}"""
    if k == 0:
        return Fraction(1)
    v = [Fraction(x) for x in values]
    return (v[2 * k - 2] * v[2 * k - 1]) ** (k * (k + 1) // 2)


# =====================================================================
# CERTIFICATION
# =====================================================================

@dataclass
class CertificationReport:
    """Outcome of an exact certification run"""
    interval: IntervalKind
    k_max: int
    trials: int
    checks: int = 0
    passed: bool = True
    first_failure_k: Optional[int] = None
    counterexample: Optional[str] = None
    notes: List[str] = field(default_factory=list)

    def fail(self, k: int, message: str) -> None:
        if self.passed:
            self.passed = False
            self.first_failure_k = k
            self.counterexample = message
            logger.warning(f"oracle counterexample ({self.interval.value}, k={k}): {message}")

    def summary(self) -> str:
        status = "PASS" if self.passed else f"FAIL at k={self.first_failure_k}"
        return f"{self.interval.value:9s} k≤{self.k_max} trials={self.trials} checks={self.checks}: {status}"


def random_rational(rng: np.random.Generator, low: Fraction, high: Fraction,
                    max_denominator: int = MAX_DENOMINATOR) -> Fraction:
    """Rational strictly inside (low, high) with denominator ≤ max_denominator"""
    den = int(rng.integers(2, max_denominator + 1))
    lo = int(np.floor(low * den)) + 1
    hi = int(np.ceil(high * den)) - 1
    if hi < lo:
        return (Fraction(low) + Fraction(high)) / 2
    return Fraction(int(rng.integers(lo, hi + 1)), den)


def random_rational_coords(interval: IntervalKind, k: int, rng: np.random.Generator) -> CanonicalCoords:
    """Interior rational coordinates supporting H̲_{2k}"""
    interval = IntervalKind(interval)
    if interval is IntervalKind.UNIT:
        values = [random_rational(rng, Fraction(0), Fraction(1)) for _ in range(2 * k)]
    elif interval is IntervalKind.HALFLINE:
        values = [random_rational(rng, Fraction(0), Fraction(4)) for _ in range(2 * k)]
    else:
        values = []
        for j in range(2 * k + 1):
            bound = (Fraction(-2), Fraction(2)) if j % 2 == 0 else (Fraction(0), Fraction(3))
            values.append(random_rational(rng, *bound))
    return CanonicalCoords(interval, tuple(values))


def certify_product_formula(interval: IntervalKind, k_max: int, trials: int, seed: int,
                            literal_halfline: bool = False) -> CertificationReport:
    """
    Exact check of the product formulas against Bareiss determinants

    On the half line the recursion det H̲_k = (m_k − m_k^−) det H̲_{k−2} is
    certified as well (odd orders use (m_{i+j+1})). With literal_halfline the
    frozen-index product is used instead of the layered one.
    """
    interval = IntervalKind(interval)
    if not 1 <= k_max <= MAX_ORDER:
        raise ValueError(f"k_max must be in 1..{MAX_ORDER}, got {k_max}")
    rng = SeedSpec(seed=seed, stream_id=0).generator()
    report = CertificationReport(interval=interval, k_max=k_max, trials=trials)

    for trial in range(trials):
        c = random_rational_coords(interval, k_max, rng)
        values = [Fraction(v) for v in c.values]
        moments = _exact_moments(interval, values, len(values))

        for k in range(1, k_max + 1):
            direct = exact_det(exact_hankel(moments, k))
            if interval is IntervalKind.HALFLINE and literal_halfline:
                product = literal_halfline_product(values, k)
            else:
                product = exact_product_det(interval, values, k)
            report.checks += 1
            if direct != product:
                report.fail(k, f"trial {trial}: coords {c.to_dict()['values']}: det {direct} != product {product}")
                break

        if interval is IntervalKind.HALFLINE and not literal_halfline:
            dets = {-1: Fraction(1), 0: Fraction(1)}
            for order in range(1, 2 * k_max + 1):
                half, odd = divmod(order, 2)
                dets[order] = exact_det(exact_hankel(moments, half, shift=odd))
                gap = moments[order] - exact_lower_bound(interval, values[: order - 1])
                report.checks += 1
                if dets[order] != gap * dets[order - 2]:
                    report.fail(order, f"trial {trial}: recursion breaks at order {order}")
                    break

    logger.info(report.summary())
    return report
