"""Gamma-function ratios, their logarithmic derivatives and numerical checks
of their (complete) monotonicity properties."""

from .matrix import PositiveMatrix, random_matrix
from .ratio import RatioConfig
from .specfun import Accuracy, DomainError, RangeError, digamma, lgamma, polygamma

__all__ = [
    "Accuracy",
    "DomainError",
    "PositiveMatrix",
    "RangeError",
    "RatioConfig",
    "digamma",
    "lgamma",
    "polygamma",
    "random_matrix",
]

__version__ = "0.1.0"
