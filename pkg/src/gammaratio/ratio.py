"""The gamma-function ratio f(t) and its logarithmic derivatives.

For a positive m x n matrix lambda with row sums alpha and column sums beta,

    f(t) = prod Gamma(1 + alpha_i t) prod Gamma(1 + beta_j t)
           / [prod_ij Gamma(1 + lambda_ij t)]^rho .

Every derivative of ln f is a weighted sum of polygamma values at the shifted
arguments 1 + c t, where c runs over the alpha, beta and lambda entries.  The
module also evaluates the Laplace density d(u) with [ln f]''(t) equal to the
Laplace transform of d, the Levy density d(s)/s of the Bernstein
representation at rho = 2, and locates the unique minimum of f when rho < 2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import NamedTuple

import numpy as np
from scipy import integrate

from .matrix import PositiveMatrix
from .specfun import EULER_GAMMA, DomainError, digamma, expm1_recip, lgamma, polygamma

__all__ = [
    "RatioConfig",
    "DensityProfile",
    "QuadratureSpec",
    "QuadratureEstimate",
    "QuadratureError",
    "BracketError",
    "Minimum",
    "log_f",
    "dlog_f",
    "d2log_f",
    "dklog_f",
    "dlog_f_at_zero",
    "d2log_f_at_zero",
    "sup_limit",
    "density",
    "density_profile",
    "laplace_density",
    "bernstein_coefficients",
    "bernstein_integral",
    "bernstein_representation",
    "levy_total_mass",
    "find_minimum",
]

MAX_DERIVATIVE_ORDER = 8
ZETA2 = math.pi**2 / 6


@dataclass(frozen=True)
class RatioConfig:
    matrix: PositiveMatrix
    rho: float = 2.0

    def __post_init__(self):
        if not isinstance(self.matrix, PositiveMatrix):
            object.__setattr__(self, "matrix", PositiveMatrix(self.matrix))
        if not math.isfinite(self.rho):
            raise ValueError("rho must be finite")
        object.__setattr__(self, "rho", float(self.rho))

    @classmethod
    def from_rows(cls, rows, rho: float = 2.0) -> "RatioConfig":
        return cls(PositiveMatrix.from_rows(rows), rho)

    @property
    def within_hypotheses(self) -> bool:
        """True when the monotonicity claims apply (rho <= 2)."""
        return self.rho <= 2.0

    @property
    def degenerate(self) -> bool:
        return self.matrix.m * self.matrix.n == 1

    @cached_property
    def coefficients(self) -> np.ndarray:
        mat = self.matrix
        return np.concatenate([mat.row_sums, mat.col_sums, mat.entries.ravel()])

    @cached_property
    def weights(self) -> np.ndarray:
        mat = self.matrix
        return np.concatenate([np.ones(mat.m + mat.n), np.full(mat.m * mat.n, -self.rho)])

    def digest(self) -> str:
        return self.matrix.digest(self.rho)


def _check_t(t):
    arr = np.asarray(t, dtype=float)
    if np.any(~(arr > 0)) or np.any(~np.isfinite(arr)):
        raise DomainError(f"t must be positive and finite, got {t!r}")
    return arr


def _reduce(cfg, values, t):
    out = cfg.weights @ values
    return float(out) if np.ndim(t) == 0 else out


def log_f(cfg: RatioConfig, t):
    tt = _check_t(t)
    args = 1.0 + np.multiply.outer(cfg.coefficients, tt)
    return _reduce(cfg, lgamma(args), t)


def dklog_f(cfg: RatioConfig, t, k: int):
    """k-th derivative of ln f at t, 1 <= k <= 8, from the polygamma formula."""
    if int(k) != k or not 1 <= k <= MAX_DERIVATIVE_ORDER:
        raise DomainError(f"derivative order must lie in [1, {MAX_DERIVATIVE_ORDER}], got {k!r}")
    tt = _check_t(t)
    c = cfg.coefficients
    args = 1.0 + np.multiply.outer(c, tt)
    psi = digamma(args) if k == 1 else polygamma(k - 1, args)
    scale = c**k
    if psi.ndim > 1:
        scale = scale[:, None]
    return _reduce(cfg, scale * psi, t)


def dlog_f(cfg: RatioConfig, t):
    return dklog_f(cfg, t, 1)


def d2log_f(cfg: RatioConfig, t):
    return dklog_f(cfg, t, 2)


def dlog_f_at_zero(cfg: RatioConfig) -> float:
    """lim_{t->0+} [ln f]'(t) = -gamma (2 - rho) sum lambda_ij."""
    return -EULER_GAMMA * (2.0 - cfg.rho) * cfg.matrix.total


def d2log_f_at_zero(cfg: RatioConfig) -> float:
    """lim_{t->0+} [ln f]''(t) = zeta(2) (sum alpha^2 + sum beta^2 - rho sum lambda^2)."""
    mat = cfg.matrix
    return ZETA2 * (
        np.sum(mat.row_sums**2) + np.sum(mat.col_sums**2) - cfg.rho * np.sum(mat.entries**2)
    )


def _xlogx(a):
    return float(np.sum(a * np.log(a)))


def sup_limit(cfg: RatioConfig) -> float:
    """lim_{t->inf} [ln f]'(t) at rho = 2."""
    if cfg.rho != 2.0:
        raise ValueError("sup_limit is defined for rho = 2 only")
    mat = cfg.matrix
    return _xlogx(mat.row_sums) + _xlogx(mat.col_sums) - 2.0 * _xlogx(mat.entries)


# --- Laplace density and Levy measure ------------------------------------


def _levy_density(cfg, s):
    """sum_c w_c / (e^(s/c) - 1); the Levy density d(s)/s."""
    c = cfg.coefficients
    ss = np.asarray(s, dtype=float)
    vals = expm1_recip(np.multiply.outer(ss, 1.0 / c))
    return vals @ cfg.weights


def density(cfg: RatioConfig, u):
    """d(u) = u (sum h(u/alpha_i) + sum h(u/beta_j) - rho sum h(u/lambda_ij)).

    With h(x) = 1/(e^x - 1); [ln f]''(t) is the Laplace transform of d.
    """
    uu = np.asarray(u, dtype=float)
    if np.any(~(uu > 0)):
        raise DomainError(f"u must be positive, got {u!r}")
    out = uu * _levy_density(cfg, uu)
    return float(out) if np.ndim(u) == 0 else out


@dataclass(frozen=True)
class QuadratureSpec:
    epsabs: float = 1e-13
    epsrel: float = 1e-11
    limit: int = 200
    # absolute bound the analytic tail estimate must fall below
    tail_tol: float = 1e-15


class QuadratureError(RuntimeError):
    """Adaptive quadrature failed to converge."""


@dataclass(frozen=True)
class QuadratureEstimate:
    value: float
    abserr: float
    truncation_u: float
    tail_bound: float


@dataclass(frozen=True)
class DensityProfile:
    u_grid: np.ndarray
    values: np.ndarray
    truncation_u: float
    tail_bound: float
    rho: float = field(default=2.0)

    def __post_init__(self):
        if len(self.u_grid) != len(self.values):
            raise ValueError("u_grid and values must have equal length")
        if np.any(np.diff(self.u_grid) <= 0) or np.any(self.u_grid <= 0):
            raise ValueError("u_grid must be strictly increasing and positive")
        if self.tail_bound < 0:
            raise ValueError("tail_bound must be nonnegative")


def _tail_constants(cfg):
    mat = cfg.matrix
    k = mat.m + mat.n + abs(cfg.rho) * mat.m * mat.n
    cmax = float(max(mat.row_sums.max(), mat.col_sums.max()))
    return k, cmax


def _laplace_tail(cfg, t, big_u):
    # |d(u)| <= K u h(u/cmax) and h(y) <= e^{-y}/(1 - e^{-U/cmax}) for y >= U/cmax
    k, cmax = _tail_constants(cfg)
    a = t + 1.0 / cmax
    q = math.exp(-big_u / cmax)
    return k / (1.0 - q) * math.exp(-a * big_u) * (big_u / a + 1.0 / a**2)


def _levy_tail(cfg, big_u):
    k, cmax = _tail_constants(cfg)
    q = math.exp(-big_u / cmax)
    return k / (1.0 - q) * cmax * q


def _truncation(tail, start, tol):
    big_u = start
    while tail(big_u) > tol:
        big_u *= 1.5
    return big_u


def _piecewise_quad(func, lo_scale, big_u, quad: QuadratureSpec):
    edges = [0.0]
    e = lo_scale / 4.0
    while e < big_u:
        edges.append(e)
        e *= 2.0
    edges.append(big_u)
    total = 0.0
    err = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        res = integrate.quad(func, a, b, epsabs=quad.epsabs, epsrel=quad.epsrel,
                             limit=quad.limit, full_output=1)
        if len(res) > 3 and res[1] > max(quad.epsabs, quad.epsrel * abs(res[0])) * 1e3:
            raise QuadratureError(f"quadrature on [{a:g}, {b:g}] failed: {res[3]}")
        total += res[0]
        err += res[1]
    return total, err


def laplace_density(cfg: RatioConfig, t: float,
                    quad: QuadratureSpec = QuadratureSpec()) -> QuadratureEstimate:
    """Integral of d(u) e^{-tu} over (0, U], with an analytic bound on the rest."""
    t = float(_check_t(t))
    _, cmax = _tail_constants(cfg)
    a = t + 1.0 / cmax
    big_u = _truncation(lambda u: _laplace_tail(cfg, t, u), 8.0 / a, quad.tail_tol)
    lo = min(float(cfg.coefficients.min()), 1.0 / a)
    value, err = _piecewise_quad(lambda u: density(cfg, u) * math.exp(-t * u), lo, big_u, quad)
    return QuadratureEstimate(value, err, big_u, _laplace_tail(cfg, t, big_u))


def density_profile(cfg: RatioConfig, points: int = 200, t: float = 0.0,
                    quad: QuadratureSpec = QuadratureSpec()) -> DensityProfile:
    """Sample d(u) on a geometric grid up to the cutoff used for Laplace parameter t.

    ``t = 0`` picks the cutoff for the undamped Levy mass integral.
    """
    if t > 0:
        _, cmax = _tail_constants(cfg)
        big_u = _truncation(lambda u: _laplace_tail(cfg, t, u), 8.0 / (t + 1.0 / cmax),
                            quad.tail_tol)
        tail = _laplace_tail(cfg, t, big_u)
    else:
        _, cmax = _tail_constants(cfg)
        big_u = _truncation(lambda u: _levy_tail(cfg, u), 8.0 * cmax, quad.tail_tol)
        tail = _levy_tail(cfg, big_u)
    lo = float(cfg.coefficients.min()) * 1e-3
    grid = np.geomspace(lo, big_u, points)
    return DensityProfile(grid, density(cfg, grid), big_u, tail, cfg.rho)


def bernstein_coefficients(cfg: RatioConfig) -> tuple[float, float]:
    """Constant and drift (a, b) of the Levy-Khintchine form of [ln f]' at rho = 2.

    a is the t -> 0+ limit of [ln f]', which vanishes; b is the linear growth
    rate, zero because [ln f]' is bounded by ``sup_limit``.
    """
    if cfg.rho != 2.0:
        raise ValueError("the Bernstein representation needs rho = 2")
    return 0.0, 0.0


def bernstein_integral(cfg: RatioConfig, t: float,
                       quad: QuadratureSpec = QuadratureSpec()) -> QuadratureEstimate:
    """Integral of (1 - e^{-ts}) d(s)/s over (0, U] plus a bound on the tail."""
    if cfg.rho != 2.0:
        raise ValueError("the Bernstein representation needs rho = 2")
    t = float(_check_t(t))
    _, cmax = _tail_constants(cfg)
    big_u = _truncation(lambda u: _levy_tail(cfg, u), 8.0 * cmax, quad.tail_tol)
    lo = min(float(cfg.coefficients.min()), 1.0 / t)
    value, err = _piecewise_quad(
        lambda s: -math.expm1(-t * s) * float(_levy_density(cfg, s)), lo, big_u, quad
    )
    return QuadratureEstimate(value, err, big_u, _levy_tail(cfg, big_u))


def bernstein_representation(cfg: RatioConfig, t: float,
                             quad: QuadratureSpec = QuadratureSpec()) -> float:
    """a + b t + integral of (1 - e^{-ts}) sigma'(s) ds with sigma'(s) = d(s)/s."""
    a, b = bernstein_coefficients(cfg)
    return a + b * t + bernstein_integral(cfg, t, quad).value


def levy_total_mass(cfg: RatioConfig, quad: QuadratureSpec = QuadratureSpec()) -> QuadratureEstimate:
    """Integral of d(s)/s over (0, inf), the t -> inf value of the representation."""
    _, cmax = _tail_constants(cfg)
    big_u = _truncation(lambda u: _levy_tail(cfg, u), 8.0 * cmax, quad.tail_tol)
    value, err = _piecewise_quad(lambda s: float(_levy_density(cfg, s)),
                                 float(cfg.coefficients.min()), big_u, quad)
    return QuadratureEstimate(value, err, big_u, _levy_tail(cfg, big_u))


# --- minimum for rho < 2 --------------------------------------------------


class BracketError(RuntimeError):
    """[ln f]' kept one sign over the whole search range."""


class Minimum(NamedTuple):
    t_star: float
    f_min: float


T_SEARCH = (1e-8, 1e8)


def find_minimum(cfg: RatioConfig, xtol: float = 1e-12) -> Minimum:
    """Unique minimiser of f for rho < 2, by bisection on the increasing [ln f]'."""
    if not cfg.rho < 2.0:
        raise ValueError("find_minimum requires rho < 2")
    lo_lim, hi_lim = T_SEARCH
    lo = hi = 1.0
    g = dlog_f(cfg, 1.0)
    if g > 0:
        while dlog_f(cfg, lo) > 0:
            lo *= 0.5
            if lo < lo_lim:
                raise BracketError(f"[ln f]' > 0 down to t={lo_lim:g} for {cfg}")
    elif g < 0:
        while dlog_f(cfg, hi) < 0:
            hi *= 2.0
            if hi > hi_lim:
                raise BracketError(f"[ln f]' < 0 up to t={hi_lim:g} for {cfg}")
    else:
        return Minimum(1.0, math.exp(log_f(cfg, 1.0)))
    g_lo, g_hi = dlog_f(cfg, lo), dlog_f(cfg, hi)
    while hi - lo > xtol * hi:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        g_mid = dlog_f(cfg, mid)
        if g_mid == 0.0:
            lo = hi = mid
            g_lo = g_hi = 0.0
            break
        if g_mid < 0:
            lo, g_lo = mid, g_mid
        else:
            hi, g_hi = mid, g_mid
    t_star = lo if abs(g_lo) <= abs(g_hi) else hi
    return Minimum(t_star, math.exp(log_f(cfg, t_star)))
