"""
Exception hierarchy shared by every module of the package
"""
from typing import Optional


class HankelMomentsError(Exception):
    """Base class for all package errors"""


class DomainError(HankelMomentsError, ValueError):
    """Argument outside the domain of a function"""


class OrderError(HankelMomentsError, ValueError):
    """Requested order exceeds the available moments or coordinates"""


class ParityError(HankelMomentsError, ValueError):
    """Real-line moment vectors must have odd length 2n-1"""


class BoundaryError(HankelMomentsError, ValueError):
    """Vector is on the boundary of (or outside) the moment space"""

    def __init__(self, message: str, order: Optional[int] = None):
        super().__init__(message)
        self.order = order


class PivotError(BoundaryError):
    """Nonpositive pivot in a symmetric factorization"""

    def __init__(self, message: str, index: int):
        super().__init__(message, order=index)
        self.index = index


class ParameterError(HankelMomentsError, ValueError):
    """Sampler parameters violate their invariants"""


class FactorizationError(HankelMomentsError, ArithmeticError):
    """Cholesky factorization failed even after maximal jitter"""


class QuadratureError(HankelMomentsError, ArithmeticError):
    """Adaptive quadrature did not converge"""


class ConfigError(HankelMomentsError, ValueError):
    """Invalid experiment or command-line configuration"""
