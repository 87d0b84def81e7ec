"""Real-argument multinomial coefficients, multivariate beta functions and the
two inequalities that follow from log-convexity of the rho = 2 ratio.

Everything is computed and compared in log space; products of these
quantities overflow doubles already for moderate arguments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .matrix import PositiveMatrix
from .specfun import DomainError, RangeError, lgamma

__all__ = [
    "WeightVector",
    "log_multinomial",
    "multinomial",
    "log_multivariate_beta",
    "multivariate_beta",
    "multinomial_beta_identity_slack",
    "log_f2_as_multinomials",
    "f2_as_multinomials",
    "multinomial_inequality_slack",
    "beta_inequality_slack",
    "printed_beta_inequality_slack",
]

# exp() of anything outside this interval is not a normal double
_LOG_MAX = math.log(np.finfo(float).max)
_LOG_MIN = math.log(np.finfo(float).tiny)


@dataclass(frozen=True)
class WeightVector:
    """Convex weights theta_k and the points y_k they combine."""

    theta: tuple
    y: tuple

    def __post_init__(self):
        theta = tuple(float(v) for v in self.theta)
        y = tuple(float(v) for v in self.y)
        if len(theta) == 0 or len(theta) != len(y):
            raise ValueError("theta and y must be non-empty and of equal length")
        if any(not 0.0 < v <= 1.0 for v in theta):
            raise ValueError("theta entries must lie in (0, 1]")
        if abs(math.fsum(theta) - 1.0) > 1e-14:
            raise ValueError(f"theta must sum to 1, got {math.fsum(theta)!r}")
        if any(not v > 0 for v in y):
            raise ValueError("y entries must be positive")
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "y", y)

    @property
    def mean(self) -> float:
        return math.fsum(t * v for t, v in zip(self.theta, self.y))


def _positive_vector(a):
    arr = np.asarray(a, dtype=float)
    if arr.ndim != 1 or arr.size == 0 or np.any(~(arr > 0)) or np.any(~np.isfinite(arr)):
        raise DomainError(f"expected a non-empty vector of positive reals, got {a!r}")
    return arr


def _exp(log_value, what):
    if log_value > _LOG_MAX:
        raise RangeError(f"{what} overflows: log value {log_value:.6g}")
    if log_value < _LOG_MIN:
        raise RangeError(f"{what} underflows: log value {log_value:.6g}")
    return math.exp(log_value)


def log_multinomial(a) -> float:
    """ln of Gamma(1 + sum a) / prod Gamma(1 + a_i)."""
    a = _positive_vector(a)
    return lgamma(1.0 + a.sum()) - float(np.sum(lgamma(1.0 + a)))


def multinomial(a) -> float:
    return _exp(log_multinomial(a), "multinomial coefficient")


def log_multivariate_beta(a) -> float:
    """ln of prod Gamma(a_i) / Gamma(sum a)."""
    a = _positive_vector(a)
    return float(np.sum(lgamma(a))) - lgamma(a.sum())


def multivariate_beta(a) -> float:
    return _exp(log_multivariate_beta(a), "multivariate beta")


def multinomial_beta_identity_slack(a) -> float:
    """Relative gap between C(sum a; a) and (sum a / prod a) / B(a)."""
    a = _positive_vector(a)
    lhs = log_multinomial(a)
    rhs = math.log(a.sum()) - float(np.sum(np.log(a))) - log_multivariate_beta(a)
    return abs(math.expm1(lhs - rhs))


def _as_matrix(lam) -> PositiveMatrix:
    return lam if isinstance(lam, PositiveMatrix) else PositiveMatrix(lam)


def _log_row_multinomials(lam: PositiveMatrix, t):
    """sum_i ln C(alpha_i t; lambda_i1 t, ..., lambda_in t), vectorised over t."""
    tt = np.atleast_1d(np.asarray(t, dtype=float))
    return (lgamma(1.0 + np.multiply.outer(lam.row_sums, tt)).sum(axis=0)
            - lgamma(1.0 + np.multiply.outer(lam.entries.ravel(), tt)).sum(axis=0))


def _log_col_multinomials(lam: PositiveMatrix, t):
    tt = np.atleast_1d(np.asarray(t, dtype=float))
    return (lgamma(1.0 + np.multiply.outer(lam.col_sums, tt)).sum(axis=0)
            - lgamma(1.0 + np.multiply.outer(lam.entries.ravel(), tt)).sum(axis=0))


def _points(w: "WeightVector"):
    """ybar followed by y_1..y_l, so one vectorised call covers every point."""
    return np.array((w.mean, *w.y))


def log_f2_as_multinomials(lam, t: float) -> float:
    """ln f at rho = 2, rebuilt as a product of row and column multinomials."""
    lam = _as_matrix(lam)
    if not t > 0:
        raise DomainError(f"t must be positive, got {t!r}")
    return float(_log_row_multinomials(lam, t)[0] + _log_col_multinomials(lam, t)[0])


def f2_as_multinomials(lam, t: float) -> float:
    return _exp(log_f2_as_multinomials(lam, t), "f2")


def multinomial_inequality_slack(lam, w: WeightVector) -> float:
    """log RHS - log LHS of the multinomial inequality.

    LHS = prod_j C_col(ybar) / prod_k [prod_j C_col(y_k)]^theta_k and
    RHS = prod_k [prod_i C_row(y_k)]^theta_k / prod_i C_row(ybar),
    where ybar = sum theta_k y_k.
    """
    lam = _as_matrix(lam)
    cols = _log_col_multinomials(lam, _points(w))
    rows = _log_row_multinomials(lam, _points(w))
    theta = np.asarray(w.theta)
    log_lhs = cols[0] - math.fsum(theta * cols[1:])
    log_rhs = math.fsum(theta * rows[1:]) - rows[0]
    return float(log_rhs - log_lhs)


def _log_betas(lam: PositiveMatrix, t):
    """sum of ln B over the rows and the columns of lam * t, vectorised over t."""
    tt = np.atleast_1d(np.asarray(t, dtype=float))
    entries = 2.0 * lgamma(np.multiply.outer(lam.entries.ravel(), tt)).sum(axis=0)
    sums = (lgamma(np.multiply.outer(lam.row_sums, tt)).sum(axis=0)
            + lgamma(np.multiply.outer(lam.col_sums, tt)).sum(axis=0))
    return entries - sums


def _log_prefactor_constant(lam: PositiveMatrix) -> float:
    """ln of prod_i (alpha_i / prod_j lambda_ij) * prod_j (beta_j / prod_i lambda_ij)."""
    logs = np.log(lam.entries)
    return float(np.sum(np.log(lam.row_sums)) + np.sum(np.log(lam.col_sums))
                 - 2.0 * logs.sum())


def _beta_slack(lam: PositiveMatrix, w: WeightVector, log_power_term: float) -> float:
    d = 2 * lam.m * lam.n - lam.m - lam.n
    betas = _log_betas(lam, _points(w))
    lhs = betas[0] - math.fsum(np.asarray(w.theta) * betas[1:])
    const = _log_prefactor_constant(lam)
    rhs = (math.fsum(d * th * math.log(yk) for th, yk in zip(w.theta, w.y))
           - log_power_term + const - math.fsum(th * const for th in w.theta))
    return lhs - rhs


def beta_inequality_slack(lam, w: WeightVector) -> float:
    """log LHS - log RHS of the multivariate beta inequality.

    The power term in the bound is (sum theta_k y_k)^(2mn - m - n), which is
    what log-convexity of f at rho = 2 and the multinomial/beta identity give.
    """
    lam = _as_matrix(lam)
    d = 2 * lam.m * lam.n - lam.m - lam.n
    return _beta_slack(lam, w, d * math.log(w.mean))


def printed_beta_inequality_slack(lam, w: WeightVector) -> float:
    """Same as ``beta_inequality_slack`` with the power term sum_k (theta_k y_k)^d.

    Kept for comparison only; this variant is not implied by log-convexity
    and can be negative.
    """
    lam = _as_matrix(lam)
    d = 2 * lam.m * lam.n - lam.m - lam.n
    power = math.fsum((th * yk) ** d for th, yk in zip(w.theta, w.y))
    return _beta_slack(lam, w, math.log(power))
