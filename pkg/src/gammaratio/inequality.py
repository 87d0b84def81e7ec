"""The exponential-sum inequality and the search for its best constant.

For a positive m x n matrix mu with row sums nu and column sums tau, and any
x > 0,

    sum_i h(x/nu_i) + sum_j h(x/tau_j) >= 2 sum_ij h(x/mu_ij),   h(x) = 1/(e^x - 1).

It follows from superadditivity of c -> h(y/c), itself a consequence of the
convexity of x -> h(1/x) together with h(1/x) -> 0 as x -> 0+.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .matrix import PositiveMatrix, log_uniform
from .specfun import DomainError, expm1_recip

log = logging.getLogger(__name__)

__all__ = [
    "h",
    "inequality_sides",
    "inequality_margin",
    "superadditivity_check",
    "sharpness_ratio",
    "batch_sharpness_ratio",
    "SharpnessResult",
    "sharpness_search",
    "X_RANGE",
]

X_RANGE = (1e-4, 1e2)
ENTRY_BOUNDS = (1e-3, 1e3)


def h(x):
    """1/(e^x - 1), using 1/x - 1/2 + x/12 below 1e-4."""
    return expm1_recip(x)


def _as_matrix(mu) -> PositiveMatrix:
    return mu if isinstance(mu, PositiveMatrix) else PositiveMatrix(mu)


def _check_x(x):
    arr = np.asarray(x, dtype=float)
    if np.any(~(arr > 0)):
        raise DomainError(f"x must be positive, got {x!r}")
    return arr


def _arguments(mu: PositiveMatrix, xx):
    """x/nu_i, x/tau_j, then x/mu_ij along the last axis."""
    recips = np.concatenate((1.0 / mu.row_sums, 1.0 / mu.col_sums, 1.0 / mu.entries.ravel()))
    return np.multiply.outer(xx, recips)


def inequality_sides(mu, x, constant: float = 2.0):
    """(LHS, RHS) of the inequality; ``x`` may be an array."""
    mu = _as_matrix(mu)
    k = mu.m + mu.n
    terms = h(_arguments(mu, _check_x(x)))
    lhs = terms[..., :k].sum(axis=-1)
    rhs = constant * terms[..., k:].sum(axis=-1)
    if np.ndim(x) == 0:
        return float(lhs), float(rhs)
    return lhs, rhs


def inequality_margin(mu, x, constant: float = 2.0):
    """LHS - RHS; nonnegative (up to rounding) for ``constant`` = 2."""
    lhs, rhs = inequality_sides(mu, x, constant)
    return lhs - rhs


def superadditivity_check(c_list, y: float) -> float:
    """Slack h(y / sum c) - sum h(y / c_k) of the superadditive map c -> h(y/c)."""
    c = np.asarray(c_list, dtype=float)
    if c.ndim != 1 or c.size == 0 or np.any(~(c > 0)):
        raise DomainError("c_list must be a non-empty list of positive reals")
    y = float(_check_x(y))
    return float(h(y / c.sum()) - h(y / c).sum())


def _scaled_h(z, shift):
    """h(z) * e^shift, finite even where h(z) itself underflows.

    Callers pass shift = max(min(z) - 1, 0), so z > 1 wherever shift > 0.
    """
    if not np.any(shift > 0):
        return h(z)
    with np.errstate(over="ignore"):
        zz = np.maximum(z, 1.0)
        scaled = np.exp(shift - zz) / -np.expm1(-zz)
    return np.where(shift > 0, scaled, h(z))


def _ratio(num, den):
    # den can underflow where R itself exceeds the double range; R is inf then
    with np.errstate(divide="ignore", over="ignore"):
        return num / den


def sharpness_ratio(mu, x):
    """R = [sum_i h(x/nu_i) + sum_j h(x/tau_j)] / sum_ij h(x/mu_ij); R >= 2.

    Numerator and denominator are both scaled by e^(z_min - 1), z_min being
    the smallest argument x / (largest row or column sum), so the ratio
    survives inputs for which every h term underflows to zero.
    """
    mu = _as_matrix(mu)
    k = mu.m + mu.n
    z = _arguments(mu, _check_x(x))
    shift = np.maximum(z[..., :k].min(axis=-1) - 1.0, 0.0)
    terms = _scaled_h(z, shift[..., None])
    r = _ratio(terms[..., :k].sum(axis=-1), terms[..., k:].sum(axis=-1))
    return float(r) if np.ndim(x) == 0 else r


def batch_sharpness_ratio(entries: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Vectorised ``sharpness_ratio`` over matrices of shape (S, m, n) and x of shape (S,)."""
    x = _check_x(x)
    rows, cols = entries.sum(axis=2), entries.sum(axis=1)
    shift = np.maximum(x / np.maximum(rows.max(axis=1), cols.max(axis=1)) - 1.0, 0.0)
    xs, sh = x[:, None], shift[:, None]
    num = _scaled_h(xs / rows, sh).sum(axis=1) + _scaled_h(xs / cols, sh).sum(axis=1)
    den = _scaled_h(xs[:, :, None] / entries, sh[:, :, None]).sum(axis=(1, 2))
    return _ratio(num, den)


@dataclass(frozen=True)
class SharpnessResult:
    best_ratio: float
    config: PositiveMatrix
    x_star: float
    evaluations: int
    search_seed: int

    def to_dict(self) -> dict:
        return {
            "best_ratio": self.best_ratio,
            "excess_over_2": self.best_ratio - 2.0,
            "config": self.config.to_list(),
            "x_star": self.x_star,
            "evaluations": self.evaluations,
            "search_seed": self.search_seed,
        }


def _decode(params, m, n):
    """Log-space parameters -> (matrices normalised to unit sum, x)."""
    w = np.exp(params[:, : m * n]).reshape(-1, m, n)
    w /= w.sum(axis=(1, 2), keepdims=True)
    return w, np.exp(params[:, -1])


def sharpness_search(m: int, n: int, samples: int, seed: int, *,
                     initial_step: float = 1.0, step_floor: float = 1e-6,
                     max_sweeps: int = 200) -> SharpnessResult:
    """Multi-start coordinate descent for the infimum of ``sharpness_ratio``.

    Every start is a log-uniform matrix (normalised to unit total, which
    loses nothing because R is invariant under (mu, x) -> (c mu, c x)) and
    a log-uniform x in ``X_RANGE``.  All starts descend together: each sweep
    tries +/- step on every log-coordinate, and a start whose sweep brought
    no improvement halves its step until it falls below ``step_floor``.
    """
    if m < 1 or n < 1 or samples < 1:
        raise ValueError("m, n and samples must be >= 1")
    rng = np.random.default_rng(seed)
    k = m * n
    lo = np.r_[np.full(k, np.log(ENTRY_BOUNDS[0])), np.log(X_RANGE[0])]
    hi = np.r_[np.full(k, np.log(ENTRY_BOUNDS[1])), np.log(X_RANGE[1])]
    params = np.empty((samples, k + 1))
    params[:, :k] = np.log(log_uniform(rng, *ENTRY_BOUNDS, size=(samples, k)))
    params[:, k] = np.log(log_uniform(rng, *X_RANGE, size=samples))

    values = batch_sharpness_ratio(*_decode(params, m, n))
    evaluations = samples
    step = np.full(samples, initial_step)
    for _ in range(max_sweeps):
        active = np.flatnonzero(step >= step_floor)
        if active.size == 0:
            break
        improved = np.zeros(active.size, dtype=bool)
        for coord in range(k + 1):
            for direction in (1.0, -1.0):
                trial = params[active].copy()
                trial[:, coord] = np.clip(trial[:, coord] + direction * step[active],
                                          lo[coord], hi[coord])
                trial_vals = batch_sharpness_ratio(*_decode(trial, m, n))
                evaluations += active.size
                better = trial_vals < values[active]
                params[active[better]] = trial[better]
                values[active[better]] = trial_vals[better]
                improved |= better
        step[active[~improved]] *= 0.5

    best = int(np.argmin(values))  # first index on ties
    w, x = _decode(params[best : best + 1], m, n)
    result = SharpnessResult(float(values[best]), PositiveMatrix(w[0]), float(x[0]),
                             evaluations, seed)
    if result.best_ratio < 2.0 - 1e-9:
        log.error("sharpness search found ratio %.17g < 2 at %r, x=%r",
                  result.best_ratio, result.config, result.x_star)
    return result
