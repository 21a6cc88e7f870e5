# src/moments/moment_space.py

"""
Moment spaces on [0,1], [0,∞) and ℝ
Moment vectors, Hankel assembly, interior tests, moment ranges m_k^± and the
transforms between ordinary moments and canonical coordinates.

Exact (fractions.Fraction) and mpmath.mpf input is transformed in its own
field. The ordinary-moment map is badly conditioned (the gaps m_k^+ − m_k^−
shrink like 4^{-k} on [0,1]), so float input is lifted to mpmath at
`settings.working_dps` digits and the result rounded back to float.
"""

import json
from contextlib import nullcontext
from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from loguru import logger
from numpy.polynomial import Polynomial
from scipy import linalg

from src.config.settings import settings
from src.moments.errors import (
    BoundaryError,
    DomainError,
    OrderError,
    ParityError,
)
from src.moments.numeric import extended_precision, is_exact, normalize, one_like, to_mpf, zero_like


class IntervalKind(str, Enum):
    """Support of the underlying measures"""
    UNIT = "unit"
    HALFLINE = "halfline"
    REALLINE = "realline"


# =====================================================================
# DOMAIN TYPES
# =====================================================================

@dataclass(frozen=True)
class MomentVector:
    """Ordinary moments (m_1, …, m_N); m_0 = 1 is implicit"""

    interval: IntervalKind
    m: Tuple

    def __post_init__(self):
        object.__setattr__(self, "interval", IntervalKind(self.interval))
        object.__setattr__(self, "m", normalize(self.m))
        if len(self.m) < 1:
            raise OrderError("a moment vector needs at least one moment")

    @property
    def N(self) -> int:
        return len(self.m)

    def with_m0(self) -> Tuple:
        """(m_0, m_1, …, m_N)"""
        return (one_like(self.m[0]),) + self.m

    def to_dict(self) -> dict:
        return {"interval": self.interval.value, "m": [_jsonable(v) for v in self.m]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, payload: dict) -> "MomentVector":
        return cls(IntervalKind(payload["interval"]), tuple(payload["m"]))

    @classmethod
    def from_json(cls, text: str) -> "MomentVector":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class CanonicalCoords:
    """
    Interval-specific coordinates of an interior moment vector

    UNIT: p ∈ (0,1)^N. HALFLINE: z ∈ (0,∞)^N.
    REALLINE: interleaved (b_1, a_1, b_2, …, b_n) with a_i > 0, length 2n−1.
    """

    interval: IntervalKind
    values: Tuple

    def __post_init__(self):
        object.__setattr__(self, "interval", IntervalKind(self.interval))
        object.__setattr__(self, "values", normalize(self.values))
        if len(self.values) < 1:
            raise OrderError("canonical coordinates need at least one entry")
        if self.interval is IntervalKind.UNIT:
            for i, p in enumerate(self.values, start=1):
                if not 0 < p < 1:
                    raise DomainError(f"p_{i} = {p} is not in (0, 1)")
        elif self.interval is IntervalKind.HALFLINE:
            for i, z in enumerate(self.values, start=1):
                if not z > 0:
                    raise DomainError(f"z_{i} = {z} is not positive")
        else:
            if len(self.values) % 2 == 0:
                raise ParityError(f"REALLINE coordinates need odd length, got {len(self.values)}")
            for i, a in enumerate(self.values[1::2], start=1):
                if not a > 0:
                    raise DomainError(f"a_{i} = {a} is not positive")

    @property
    def N(self) -> int:
        return len(self.values)

    @property
    def p(self) -> Tuple:
        self._expect(IntervalKind.UNIT)
        return self.values

    @property
    def z(self) -> Tuple:
        self._expect(IntervalKind.HALFLINE)
        return self.values

    @property
    def b(self) -> Tuple:
        self._expect(IntervalKind.REALLINE)
        return self.values[0::2]

    @property
    def a(self) -> Tuple:
        self._expect(IntervalKind.REALLINE)
        return self.values[1::2]

    def _expect(self, interval: IntervalKind) -> None:
        if self.interval is not interval:
            raise DomainError(f"coordinates are {self.interval.value}, not {interval.value}")

    def to_dict(self) -> dict:
        return {"interval": self.interval.value, "values": [_jsonable(v) for v in self.values]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, payload: dict) -> "CanonicalCoords":
        return cls(IntervalKind(payload["interval"]), tuple(payload["values"]))

    @classmethod
    def from_json(cls, text: str) -> "CanonicalCoords":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class JacobiCoefficients:
    """
    Three-term recurrence data of the monic orthogonal polynomials

    x P_k = P_{k+1} + alpha_{k+1} P_k + beta_k P_{k−1}; alpha has n entries and
    beta n−1 (or n, when the last diagonal entry is not determined yet).
    """

    alpha: Tuple
    beta: Tuple

    def __post_init__(self):
        object.__setattr__(self, "alpha", normalize(self.alpha))
        object.__setattr__(self, "beta", normalize(self.beta))
        if len(self.alpha) - len(self.beta) not in (0, 1):
            raise OrderError(
                f"inconsistent recurrence lengths: {len(self.alpha)} alpha, {len(self.beta)} beta"
            )
        for i, b in enumerate(self.beta, start=1):
            if not b > 0:
                raise DomainError(f"beta_{i} = {b} is not positive")

    @property
    def n(self) -> int:
        return len(self.alpha)

    def square(self) -> "JacobiCoefficients":
        """Drop a trailing beta so the recurrence spans an n×n Jacobi matrix"""
        return JacobiCoefficients(self.alpha, self.beta[: len(self.alpha) - 1])


def _jsonable(v):
    if is_exact([v]):
        return str(v)
    return float(v)


def _is_float(values: Sequence) -> bool:
    return all(isinstance(v, float) for v in values)


def _working_precision(values: Sequence):
    """extended_precision(working_dps) for float input, a no-op otherwise"""
    return extended_precision(settings.working_dps) if _is_float(values) else nullcontext()


def _lift(values: Sequence) -> Tuple:
    return to_mpf(values) if _is_float(values) else tuple(values)


# =====================================================================
# COORDINATE CHAINS (boundary values allowed)
# =====================================================================

def _pad(values: Sequence, length: int, zero) -> List:
    values = list(values)
    return values + [zero] * max(0, length - len(values))


def _zeta_from_p(p: Sequence) -> List:
    """ζ_1 = p_1, ζ_k = q_{k−1} p_k (q_0 = 1)"""
    zeta = []
    q_prev = None
    for pk in p:
        zeta.append(pk if q_prev is None else q_prev * pk)
        q_prev = one_like(pk) - pk
    return zeta


def _chain_recurrence(zeta: Sequence, N: int) -> Tuple[List, List]:
    """alpha_1 = ζ_1, alpha_{k+1} = ζ_{2k} + ζ_{2k+1}, beta_k = ζ_{2k−1} ζ_{2k}"""
    zero = zero_like(zeta[0])
    zeta = _pad(zeta, N + 1, zero)
    d = N // 2 + 1
    alpha = [zeta[0]] + [zeta[2 * k - 1] + zeta[2 * k] for k in range(1, d)]
    beta = [zeta[2 * k - 2] * zeta[2 * k - 1] for k in range(1, d)]
    return alpha, beta


def _recurrence_from_values(interval: IntervalKind, values: Sequence, N: int) -> Tuple[List, List]:
    if interval is IntervalKind.UNIT:
        return _chain_recurrence(_zeta_from_p(values), N)
    if interval is IntervalKind.HALFLINE:
        return _chain_recurrence(list(values), N)
    return list(values[0::2]), list(values[1::2])


def _moments_from_recurrence(alpha: Sequence, beta: Sequence, N: int) -> Tuple:
    """
    m_k = (T^k)_{00} for the tridiagonal T with diagonal alpha, superdiagonal
    beta and unit subdiagonal

    Only rows 0..⌊N/2⌋ can feed back into entry 0 within N steps.
    """
    ref = alpha[0]
    zero, one = zero_like(ref), one_like(ref)
    d = N // 2 + 1
    a = _pad(alpha[:d], d, zero)
    b = _pad(beta[: d - 1], d - 1, zero)
    v = [one] + [zero] * (d - 1)
    out = []
    for _ in range(N):
        w = []
        for i in range(d):
            s = a[i] * v[i]
            if i + 1 < d:
                s = s + b[i] * v[i + 1]
            if i > 0:
                s = s + v[i - 1]
            w.append(s)
        v = w
        out.append(v[0])
    return tuple(out)


def _moments_from_values(interval: IntervalKind, values: Sequence) -> Tuple:
    alpha, beta = _recurrence_from_values(interval, values, len(values))
    return _moments_from_recurrence(alpha, beta, len(values))


def _extended_moment(interval: IntervalKind, prefix: Sequence, boundary) -> object:
    """Last moment after appending one boundary coordinate to a canonical prefix"""
    return _moments_from_values(interval, list(prefix) + [boundary])[-1]


# =====================================================================
# HANKEL MATRICES AND INTERIOR TEST
# =====================================================================

def assemble_hankel(m: MomentVector, k: int) -> np.ndarray:
    """
    H̲_{2k} = (m_{i+j})_{i,j=0..k} with m_0 = 1

    Float input gives a float array, exact or mpf input an object array.
    """
    if k < 0 or 2 * k > m.N:
        raise OrderError(f"H_{2 * k} needs {2 * k} moments, vector has {m.N}")
    full = m.with_m0()
    rows = [[full[i + j] for j in range(k + 1)] for i in range(k + 1)]
    dtype = float if all(isinstance(v, float) for v in full) else object
    return np.array(rows, dtype=dtype)


def ldl_pivots(matrix) -> List:
    """
    Pivots of an unpivoted LDLᵀ factorization

    Stops after the first nonpositive pivot, which is returned last.
    Works over any field the entries live in.
    """
    a = [list(row) for row in matrix]
    n = len(a)
    pivots = []
    for j in range(n):
        d = a[j][j]
        pivots.append(d)
        if not d > 0:
            break
        for i in range(j + 1, n):
            f = a[i][j] / d
            for l in range(j + 1, n):
                a[i][l] = a[i][l] - f * a[j][l]
    return pivots


def _hankel_family(interval: IntervalKind, full: Sequence) -> List[List[List]]:
    """Matrices whose strict positive definiteness characterizes the interior"""
    N = len(full) - 1
    k, odd = divmod(N, 2)

    def hankel(entry, size):
        return [[entry(i + j) for j in range(size)] for i in range(size)]

    if interval is IntervalKind.REALLINE:
        return [hankel(lambda s: full[s], k + 1)]
    if interval is IntervalKind.HALFLINE:
        shifted = hankel(lambda s: full[s + 1], k + odd)
        return [hankel(lambda s: full[s], k + 1), shifted]
    if odd:
        return [
            hankel(lambda s: full[s + 1], k + 1),
            hankel(lambda s: full[s] - full[s + 1], k + 1),
        ]
    return [
        hankel(lambda s: full[s], k + 1),
        hankel(lambda s: full[s + 1] - full[s + 2], k),
    ]


def is_interior(m: MomentVector, rtol: Optional[float] = None) -> bool:
    """
    True iff m lies in the interior of its moment space

    Every matrix of the interval's Hankel family must have all LDLᵀ pivots
    above rtol · (largest pivot). Near-singular but interior vectors of high
    order (arcsine beyond k ≈ 15) fall under the relative threshold in double
    precision and are reported as boundary.
    """
    rtol = settings.interior_pivot_rtol if rtol is None else rtol
    full = [float(v) for v in m.with_m0()]
    for matrix in _hankel_family(m.interval, full):
        if not matrix:
            continue
        pivots = ldl_pivots(matrix)
        if len(pivots) < len(matrix) or not pivots[-1] > 0:
            return False
        if min(pivots) <= rtol * max(pivots):
            return False
    return True


# =====================================================================
# MOMENT RANGES AND THE FORWARD MAP
# =====================================================================

def _canonical_prefix(interval: IntervalKind, prefix: Sequence) -> List:
    """Canonical coordinates of a UNIT/HALFLINE prefix via the bounds recursion"""
    if not prefix:
        return []
    one, zero = one_like(prefix[0]), zero_like(prefix[0])
    coords: List = []
    prev_gap = one
    for k, mk in enumerate(prefix, start=1):
        lower = _extended_moment(interval, coords, zero)
        gap = mk - lower
        if not gap > 0:
            raise BoundaryError(f"m_{k} = {mk} is not above its lower bound {lower}", order=k)
        if interval is IntervalKind.UNIT:
            upper = _extended_moment(interval, coords, one)
            width = upper - lower
            if not upper - mk > 0:
                raise BoundaryError(f"m_{k} = {mk} is not below its upper bound {upper}", order=k)
            coords.append(gap / width)
        else:
            coords.append(gap / prev_gap)
            prev_gap = gap
        logger.trace(f"{interval.value} step {k}: coordinate {coords[-1]}")
    return coords


def moment_bounds(m_prefix: Union[MomentVector, Sequence], interval: IntervalKind):
    """
    Range (m_k^−, m_k^+) of the next moment given an interior prefix

    The prefix is mapped to canonical form and extended by the boundary
    values p_k ∈ {0, 1} (UNIT) or z_k = 0 (HALFLINE). The HALFLINE upper
    bound is +∞.
    """
    interval = IntervalKind(interval)
    if interval is IntervalKind.REALLINE:
        raise DomainError("moment ranges on the real line are unbounded on both sides")
    if isinstance(m_prefix, MomentVector):
        if m_prefix.interval is not interval:
            raise DomainError(f"prefix is {m_prefix.interval.value}, asked for {interval.value}")
        prefix = list(m_prefix.m)
    else:
        prefix = list(normalize(m_prefix))
    if not prefix:
        if interval is IntervalKind.UNIT:
            return 0.0, 1.0
        return 0.0, np.inf
    with _working_precision(prefix):
        work = list(_lift(prefix))
        coords = _canonical_prefix(interval, work)
        zero, one = zero_like(work[0]), one_like(work[0])
        lower = _extended_moment(interval, coords, zero)
        upper = _extended_moment(interval, coords, one) if interval is IntervalKind.UNIT else np.inf
    if _is_float(prefix):
        return float(lower), float(upper)
    return lower, upper


def _realline_coordinates(m: Sequence) -> List:
    """
    Chebyshev algorithm on (m_0, …, m_{2n−1})

    σ_{k,l} = σ_{k−1,l+1} − b_k σ_{k−1,l} − a_{k−1} σ_{k−2,l};
    a_k = σ_{k,k}/σ_{k−1,k−1}, b_{k+1} = σ_{k,k+1}/σ_{k,k} − σ_{k−1,k}/σ_{k−1,k−1}.
    """
    one, zero = one_like(m[0]), zero_like(m[0])
    full = [one] + list(m)
    L = len(full)
    n = L // 2
    sigma_prev = [zero] * L
    sigma = list(full)
    b = [full[1]]
    a: List = []
    for k in range(1, n):
        a_prev = a[-1] if a else zero
        new = [zero] * L
        for l in range(k, L - k):
            new[l] = sigma[l + 1] - b[k - 1] * sigma[l] - a_prev * sigma_prev[l]
        if not new[k] > 0:
            raise BoundaryError(f"H_{2 * k} is not positive definite", order=2 * k)
        a.append(new[k] / sigma[k - 1])
        b.append(new[k + 1] / new[k] - sigma[k] / sigma[k - 1])
        sigma_prev, sigma = sigma, new
    out = []
    for k in range(n):
        out.append(b[k])
        if k < n - 1:
            out.append(a[k])
    return out


def moments_to_canonical(m: MomentVector) -> CanonicalCoords:
    """
    Canonical coordinates of an interior moment vector

    Float vectors are transformed at `settings.working_dps` digits, so the
    boundary test is made on the exact binary values of the input.

    Raises:
        BoundaryError: with the first order whose moment sits on (or past) its range
        ParityError: REALLINE vectors of even length
    """
    if m.interval is IntervalKind.REALLINE and m.N % 2 == 0:
        raise ParityError(f"REALLINE moment vectors need odd length 2n−1, got {m.N}")
    with _working_precision(m.m):
        work = _lift(m.m)
        if m.interval is IntervalKind.REALLINE:
            values = _realline_coordinates(work)
        else:
            values = _canonical_prefix(m.interval, list(work))
    if _is_float(m.m):
        values = [float(v) for v in values]
    return CanonicalCoords(m.interval, tuple(values))


# =====================================================================
# THE INVERSE MAP AND RECURRENCE DATA
# =====================================================================

def canonical_to_jacobi(c: CanonicalCoords) -> JacobiCoefficients:
    """
    Recurrence coefficients determined by the coordinates

    N coordinates fix ⌈N/2⌉ diagonal and ⌊N/2⌋ off-diagonal entries.
    """
    alpha, beta = _recurrence_from_values(c.interval, c.values, c.N)
    return JacobiCoefficients(tuple(alpha[: (c.N + 1) // 2]), tuple(beta[: c.N // 2]))


def canonical_to_moments(c: CanonicalCoords) -> MomentVector:
    """Moments (m_1, …, m_N) from powers of the Jacobi operator (float input at working_dps)"""
    with _working_precision(c.values):
        moments = _moments_from_values(c.interval, _lift(c.values))
    if _is_float(c.values):
        moments = tuple(float(v) for v in moments)
    return MomentVector(c.interval, moments)


def _tridiagonal(jacobi: JacobiCoefficients) -> Tuple[np.ndarray, np.ndarray]:
    square = jacobi.square()
    alpha = np.array([float(v) for v in square.alpha])
    off = np.sqrt(np.array([float(v) for v in square.beta]))
    return alpha, off


def jacobi_matrix(jacobi: JacobiCoefficients) -> np.ndarray:
    """Symmetric n×n Jacobi matrix with off-diagonal √beta"""
    alpha, off = _tridiagonal(jacobi)
    return np.diag(alpha) + np.diag(off, 1) + np.diag(off, -1)


def gauss_quadrature(jacobi: JacobiCoefficients) -> Tuple[np.ndarray, np.ndarray]:
    """
    n-point discrete measure sharing the first 2n−1 moments (Golub–Welsch)

    Returns:
        (nodes, weights) with weights summing to 1
    """
    alpha, off = _tridiagonal(jacobi)
    if alpha.size == 1:
        return alpha.copy(), np.ones(1)
    nodes, vectors = linalg.eigh_tridiagonal(alpha, off)
    weights = vectors[0, :] ** 2
    return nodes, weights


def monic_polynomials(jacobi: JacobiCoefficients) -> List[Polynomial]:
    """P_0, …, P_n from x P_k = P_{k+1} + alpha_{k+1} P_k + beta_k P_{k−1}"""
    x = Polynomial([0.0, 1.0])
    polys = [Polynomial([1.0])]
    for k, alpha in enumerate(jacobi.alpha):
        nxt = (x - float(alpha)) * polys[-1]
        if k > 0:
            nxt = nxt - float(jacobi.beta[k - 1]) * polys[-2]
        polys.append(nxt)
    return polys


def characteristic_polynomial(jacobi: JacobiCoefficients) -> Polynomial:
    """det(xI − J_n) through the three-term recurrence"""
    return monic_polynomials(jacobi)[-1]


def polynomial_norms(jacobi: JacobiCoefficients) -> np.ndarray:
    """∫P_i² dμ = beta_1 ⋯ beta_i for i = 0, …, len(beta)"""
    return np.concatenate([[1.0], np.cumprod([float(b) for b in jacobi.beta])])
