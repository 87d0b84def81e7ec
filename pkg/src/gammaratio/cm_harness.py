"""Finite-order checks of complete monotonicity and related properties.

Complete monotonicity cannot be decided numerically.  What the checks here
certify is "(-1)^k f^(k) >= 0 for k = 0..K at every grid point, up to a
relative tolerance tol * max(1, |f^(k)(t)|)".

Derivative handles take ``(t, k)`` and return the k-th derivative at t.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "CMReport",
    "LogConvexReport",
    "HandleError",
    "default_grid",
    "check_cm",
    "check_bernstein",
    "check_log_cm",
    "check_log_convex",
]

DerivativeHandle = Callable[[float, int], float]


def default_grid(points: int = 50, t_min: float = 1e-3, t_max: float = 1e3) -> np.ndarray:
    return np.geomspace(t_min, t_max, points)


class HandleError(RuntimeError):
    """A derivative handle raised while being evaluated at a grid point."""


@dataclass(frozen=True)
class CMReport:
    kind: str
    orders: tuple
    grid: tuple
    min_slack_per_order: tuple
    worst_t_per_order: tuple
    failed_orders: tuple
    tolerance: float
    first_failure: tuple | None = field(default=None)

    @property
    def max_order(self) -> int:
        return self.orders[-1]

    @property
    def passed(self) -> bool:
        return not self.failed_orders

    @property
    def verdict(self) -> str:
        return "pass" if self.passed else "fail"

    def slack(self, order: int) -> float:
        return self.min_slack_per_order[self.orders.index(order)]

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "verdict": self.verdict,
            "orders": list(self.orders),
            "min_slack_per_order": list(self.min_slack_per_order),
            "worst_t_per_order": list(self.worst_t_per_order),
            "failed_orders": list(self.failed_orders),
            "first_failure": list(self.first_failure) if self.first_failure else None,
            "tolerance": self.tolerance,
            "grid": [self.grid[0], self.grid[-1], len(self.grid)],
        }


def _evaluate(handle, t, k):
    try:
        return float(handle(t, k))
    except Exception as exc:  # noqa: BLE001 - re-raised with grid context
        raise HandleError(f"handle failed at t={t!r}, order {k}: {exc}") from exc


def _signed_check(kind, handle, derivative_orders, signs, grid, tol):
    """Core loop: for each (order, sign) require sign * handle(t, order) >= 0."""
    grid = tuple(float(t) for t in grid)
    slacks, worst_t, failed = [], [], []
    first_failure = None
    for k, sign in zip(derivative_orders, signs):
        worst, worst_at, bad = np.inf, grid[0], False
        for t in grid:
            v = _evaluate(handle, t, k)
            s = sign * v
            if s < worst:
                worst, worst_at = s, t
            if s < -tol * max(1.0, abs(v)):
                bad = True
                if first_failure is None:
                    first_failure = (k, t, s)
        slacks.append(worst)
        worst_t.append(worst_at)
        if bad:
            failed.append(k)
    return CMReport(kind, tuple(derivative_orders), grid, tuple(slacks), tuple(worst_t),
                    tuple(failed), tol, first_failure)


def check_cm(f_derivatives: DerivativeHandle, K: int, grid: Sequence[float] | None = None,
             tol: float = 1e-10) -> CMReport:
    """(-1)^k f^(k)(t) >= 0 for k = 0..K on the grid."""
    grid = default_grid() if grid is None else grid
    orders = list(range(K + 1))
    return _signed_check("cm", f_derivatives, orders, [(-1.0) ** k for k in orders], grid, tol)


def check_bernstein(f: DerivativeHandle, K: int, grid: Sequence[float] | None = None,
                    tol: float = 1e-10) -> CMReport:
    """f >= 0 and f' completely monotonic to order K - 1, i.e. (-1)^(k-1) f^(k) >= 0."""
    grid = default_grid() if grid is None else grid
    orders = list(range(K + 1))
    signs = [1.0] + [(-1.0) ** (k - 1) for k in orders[1:]]
    return _signed_check("bernstein", f, orders, signs, grid, tol)


def check_log_cm(f_log_derivatives: DerivativeHandle, K: int,
                 grid: Sequence[float] | None = None, tol: float = 1e-10) -> CMReport:
    """(-1)^k [ln f]^(k)(t) >= 0 for k = 1..K; the handle returns [ln f]^(k)."""
    grid = default_grid() if grid is None else grid
    orders = list(range(1, K + 1))
    return _signed_check("log_cm", f_log_derivatives, orders, [(-1.0) ** k for k in orders],
                         grid, tol)


@dataclass(frozen=True)
class LogConvexReport:
    passed: bool
    worst_slack: float
    worst_pair: tuple
    tolerance: float

    @property
    def verdict(self) -> str:
        return "pass" if self.passed else "fail"

    def to_dict(self) -> dict:
        return {"kind": "log_convex", "verdict": self.verdict, "worst_slack": self.worst_slack,
                "worst_pair": list(self.worst_pair), "tolerance": self.tolerance}


def check_log_convex(f_log: Callable[[float], float], grid: Sequence[float] | None = None,
                     tol: float = 1e-12) -> LogConvexReport:
    """Midpoint convexity of ln f over every pair of grid points."""
    grid = [float(t) for t in (default_grid() if grid is None else grid)]
    values = [_evaluate(lambda t, _: f_log(t), t, 0) for t in grid]
    worst, worst_pair, passed = np.inf, (grid[0], grid[0]), True
    for (i, t1), (j, t2) in itertools.combinations(enumerate(grid), 2):
        mid = _evaluate(lambda t, _: f_log(t), 0.5 * (t1 + t2), 0)
        slack = 0.5 * (values[i] + values[j]) - mid
        if slack < worst:
            worst, worst_pair = slack, (t1, t2)
        if slack < -tol * max(1.0, abs(mid)):
            passed = False
    return LogConvexReport(passed, float(worst), worst_pair, tol)
