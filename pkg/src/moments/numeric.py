"""
Scalar-field helpers

The moment transforms are written over a generic field so that the same code
runs in double precision, in exact rational arithmetic (fractions.Fraction)
and in extended precision (mpmath.mpf).
"""
from contextlib import contextmanager
from fractions import Fraction
from numbers import Rational
from typing import Iterable, Iterator, Sequence, Tuple

import mpmath
import numpy as np


Scalar = object


def normalize(values: Iterable) -> Tuple:
    """
    Promote a sequence to a single field

    mpmath.mpf wins over Fraction, Fraction over float; plain ints join
    whichever field is present and numpy scalars become Python floats.
    Strings ("3/8", "0.25") parse as exact rationals.
    """
    values = [Fraction(v) if isinstance(v, str) else v for v in values]
    if any(isinstance(v, mpmath.mpf) for v in values):
        return to_mpf(values)
    if any(isinstance(v, Fraction) for v in values):
        return tuple(Fraction(v) if isinstance(v, Rational) else Fraction(float(v)) for v in values)
    return tuple(float(v) for v in values)


def one_like(x):
    return x * 0 + 1


def zero_like(x):
    return x * 0


def is_exact(values: Sequence) -> bool:
    return all(isinstance(v, (Fraction, int)) for v in values)


def log(x):
    """Natural log in the field of x (floats for exact rationals)"""
    if isinstance(x, mpmath.mpf):
        return mpmath.log(x)
    return float(np.log(float(x)))


def to_float(values: Iterable) -> np.ndarray:
    return np.array([float(v) for v in values], dtype=float)


def to_mpf(values: Iterable) -> Tuple:
    return tuple(mpmath.mpf(v) if not isinstance(v, Fraction)
                 else mpmath.mpf(v.numerator) / v.denominator for v in values)


@contextmanager
def extended_precision(dps: int) -> Iterator[None]:
    """Run a block with mpmath working at `dps` decimal digits"""
    with mpmath.workdps(dps):
        yield
