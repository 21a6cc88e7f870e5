# src/moments/hankel_det.py

"""
Hankel log-determinants
Direct route (log-pivots of an LDLᵀ factorization) and product route
(canonical coordinates), plus the reference centerings.
"""

from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from loguru import logger

from src.moments.errors import DomainError, OrderError, PivotError
from src.moments.moment_space import (
    CanonicalCoords,
    IntervalKind,
    MomentVector,
    assemble_hankel,
    ldl_pivots,
)
from src.moments.numeric import log, one_like, zero_like

LOG2 = float(np.log(2.0))


class Method(str, Enum):
    DIRECT = "direct"
    PRODUCT = "product"


@dataclass(frozen=True)
class HankelLogDet:
    """
    log det H̲_{2k} sampled at the orders `k`

    `grid` holds the t-values when the path comes from a process evaluation.
    """

    interval: IntervalKind
    method: Method
    k: Tuple[int, ...]
    values: Tuple[float, ...]
    grid: Optional[Tuple[float, ...]] = None

    def __post_init__(self):
        if len(self.k) != len(self.values):
            raise OrderError(f"{len(self.k)} orders for {len(self.values)} values")
        for order, value in zip(self.k, self.values):
            if order == 0 and value != 0:
                raise DomainError(f"log det H_0 must be 0, got {value}")
            if not np.isfinite(float(value)):
                raise DomainError(f"log det H_{2 * order} is not finite")

    def centered(self) -> np.ndarray:
        """D − D⁰ against the interval's reference measure"""
        return np.asarray(self.values, dtype=float) - reference_centering(self.interval, np.asarray(self.k))

    def to_frame(self) -> pd.DataFrame:
        """Columns t, k, logdet, centered_logdet"""
        grid = self.grid if self.grid is not None else [np.nan] * len(self.k)
        return pd.DataFrame({
            "t": list(grid),
            "k": list(self.k),
            "logdet": [float(v) for v in self.values],
            "centered_logdet": self.centered(),
        })


# =====================================================================
# CENTERINGS
# =====================================================================

def arcsine_centering(k):
    """D⁰_{2k} = −k(2k+1) log 2 (arcsine law, all p = 1/2)"""
    if np.ndim(k) == 0:
        if k < 0:
            raise DomainError(f"order must be nonnegative, got {k}")
        return -k * (2 * k + 1) * LOG2
    k = np.asarray(k)
    return -k * (2 * k + 1) * LOG2


def reference_centering(interval: IntervalKind, k):
    """
    D⁰ of the central measure: arcsine on [0,1]; Marchenko–Pastur (z ≡ 1)
    and semicircle (a ≡ 1) have unit Hankel determinants
    """
    if IntervalKind(interval) is IntervalKind.UNIT:
        return arcsine_centering(k)
    return np.zeros_like(np.asarray(k, dtype=float)) if np.ndim(k) else 0.0


# =====================================================================
# DIRECT ROUTE
# =====================================================================

def logdet_direct(m: MomentVector, k: int):
    """
    log det H̲_{2k} as the sum of log-pivots

    Raises:
        PivotError: first nonpositive pivot (boundary, exterior or breakdown)
    """
    matrix = assemble_hankel(m, k)
    pivots = ldl_pivots(matrix)
    if len(pivots) < k + 1 or not pivots[-1] > 0:
        index = len(pivots) - 1
        logger.debug(f"pivot {index} of H_{2 * k} is {pivots[-1]}")
        raise PivotError(f"pivot {index} of H_{2 * k} is not positive: {pivots[-1]}", index)
    total = zero_like(log(pivots[0]))
    for d in pivots:
        total = total + log(d)
    return total


# =====================================================================
# PRODUCT ROUTE
# =====================================================================

def _layer_terms(c: CanonicalCoords, k: int) -> list:
    """log of the j-th layer factor, j = 1..k"""
    v = c.values
    if c.interval is IntervalKind.REALLINE:
        if k > len(v) // 2:
            raise OrderError(f"order {k} needs {k} a-coordinates, have {len(v) // 2}")
        return [log(a) for a in c.a[:k]]
    if 2 * k > len(v):
        raise OrderError(f"order {k} needs {2 * k} coordinates, have {len(v)}")
    if c.interval is IntervalKind.HALFLINE:
        return [log(v[2 * j - 2]) + log(v[2 * j - 1]) for j in range(1, k + 1)]
    one = one_like(v[0])
    q = [one - p for p in v]
    layers = []
    for j in range(1, k + 1):
        term = log(v[2 * j - 2]) + log(q[2 * j - 2]) + log(v[2 * j - 1])
        if j > 1:
            term = term + log(q[2 * j - 3])
        layers.append(term)
    return layers


def logdet_product(c: CanonicalCoords, k: int):
    """
    log det H̲_{2k} = Σ_{j=1..k} (k − j + 1) L_j

    L_1 = log(p_1 q_1 p_2), L_j = log(q_{2j−2} p_{2j−1} q_{2j−1} p_{2j}) on [0,1];
    L_j = log(z_{2j−1} z_{2j}) on [0,∞); L_j = log a_j on ℝ.
    """
    if k < 0:
        raise OrderError(f"order must be nonnegative, got {k}")
    layers = _layer_terms(c, k)
    if not layers:
        return 0.0
    total = zero_like(layers[0])
    for j, term in enumerate(layers, start=1):
        total = total + (k - j + 1) * term
    return total


def logdet_layers(values: np.ndarray, interval: IntervalKind) -> np.ndarray:
    """
    Whole paths k = 0..K for a batch of coordinate rows

    Args:
        values: array (reps, N) of canonical coordinates
        interval: interval of the coordinates

    Returns:
        array (reps, K+1) with column 0 equal to 0
    """
    values = np.atleast_2d(np.asarray(values, dtype=float))
    interval = IntervalKind(interval)
    if interval is IntervalKind.REALLINE:
        layers = np.log(values[:, 1::2])
    elif interval is IntervalKind.HALFLINE:
        K = values.shape[1] // 2
        logz = np.log(values[:, : 2 * K])
        layers = logz[:, 0::2] + logz[:, 1::2]
    else:
        K = values.shape[1] // 2
        p = values[:, : 2 * K]
        logp, logq = np.log(p), np.log1p(-p)
        layers = logp[:, 0::2] + logq[:, 0::2] + logp[:, 1::2]
        layers[:, 1:] += logq[:, 1:-1:2]
    paths = np.cumsum(np.cumsum(layers, axis=1), axis=1)
    return np.concatenate([np.zeros((values.shape[0], 1)), paths], axis=1)


def grid_orders(n: int, grid: Sequence[float]) -> np.ndarray:
    """⌊n t⌋ for each t, tolerant to representation error in t"""
    grid = np.asarray(grid, dtype=float)
    if grid.size and (grid.min() < 0 or grid.max() > 1):
        raise DomainError("grid points must lie in [0, 1]")
    return np.floor(n * grid + 1e-9).astype(int)


def logdet_process(c: CanonicalCoords, n: int, grid: Sequence[float]) -> HankelLogDet:
    """
    D_{2⌊nt⌋} over a grid (⌊(n−1)t⌋ on the real line)

    One pass over the layers, then a lookup per grid point.
    """
    scale = n - 1 if c.interval is IntervalKind.REALLINE else n
    ks = grid_orders(scale, grid)
    K = int(ks.max()) if ks.size else 0
    path = logdet_layers(np.asarray([float(v) for v in c.values])[None, :], c.interval)[0]
    if K >= path.size:
        raise OrderError(f"order {K} exceeds the {path.size - 1} layers available")
    return HankelLogDet(
        interval=c.interval,
        method=Method.PRODUCT,
        k=tuple(int(k) for k in ks),
        values=tuple(float(path[k]) for k in ks),
        grid=tuple(float(t) for t in grid),
    )
