"""Log-gamma, digamma and polygamma kernels for positive real arguments.

All kernels shift the argument upward with the functional recurrence until it
exceeds ``Accuracy.shift_threshold`` and then sum the Bernoulli-number
asymptotic series (log-gamma on [0.5, 2.5] uses a Taylor series around its
zeros instead).  They accept a Python float or a numpy array; scalar input
gives a float back.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

__all__ = [
    "Accuracy",
    "DEFAULT_ACCURACY",
    "DomainError",
    "RangeError",
    "ConvergenceError",
    "EULER_GAMMA",
    "MAX_ARGUMENT",
    "BERNOULLI",
    "lgamma",
    "digamma",
    "polygamma",
    "binet_density",
    "expm1_recip",
]

EULER_GAMMA = 0.57721566490153286061
HALF_LOG_2PI = 0.91893853320467274178

# lgamma(1e300) ~ 6.9e302 is still finite; anything above is refused.
MAX_ARGUMENT = 1e300

_EPS = np.finfo(float).eps


class DomainError(ValueError):
    """Argument outside the supported domain (x <= 0, bad order)."""


class RangeError(OverflowError):
    """Argument or result beyond the representable floating-point range."""


class ConvergenceError(ArithmeticError):
    """Asymptotic series did not reach the requested accuracy."""


@dataclass(frozen=True)
class Accuracy:
    rel_tol: float = 1e-12
    shift_threshold: float = 10.0
    max_bernoulli_terms: int = 20

    def __post_init__(self):
        if not self.rel_tol > 0:
            raise ValueError("rel_tol must be positive")
        if not self.shift_threshold >= 2:
            raise ValueError("shift_threshold must be >= 2")
        if not 4 <= self.max_bernoulli_terms <= len(BERNOULLI):
            raise ValueError(f"max_bernoulli_terms must lie in [4, {len(BERNOULLI)}]")


# B_2, B_4, ..., B_40
_BERNOULLI_EXACT = (
    Fraction(1, 6),
    Fraction(-1, 30),
    Fraction(1, 42),
    Fraction(-1, 30),
    Fraction(5, 66),
    Fraction(-691, 2730),
    Fraction(7, 6),
    Fraction(-3617, 510),
    Fraction(43867, 798),
    Fraction(-174611, 330),
    Fraction(854513, 138),
    Fraction(-236364091, 2730),
    Fraction(8553103, 6),
    Fraction(-23749461029, 870),
    Fraction(8615841276005, 14322),
    Fraction(-7709321041217, 510),
    Fraction(2577687858367, 6),
    Fraction(-26315271553053477373, 1919190),
    Fraction(2929993913841559, 6),
    Fraction(-261082718496449122051, 13530),
)
BERNOULLI = tuple(float(b) for b in _BERNOULLI_EXACT)

DEFAULT_ACCURACY = Accuracy()


def _prepare(x):
    arr = np.asarray(x, dtype=float)
    if np.any(np.isnan(arr)) or np.any(arr <= 0):
        raise DomainError(f"argument must be positive, got {x!r}")
    if np.any(arr > MAX_ARGUMENT):
        raise RangeError(f"argument exceeds safe range {MAX_ARGUMENT:g}")
    return arr


def _finish(result, like):
    if np.ndim(like) == 0:
        return float(result)
    return result


def _shift(x, threshold):
    """Number of unit steps that lift each element above ``threshold``."""
    return np.maximum(0, np.ceil(threshold - x)).astype(int)


def _series(coefs, powers_of_inv, acc):
    """Sum ``coefs[k] * powers_of_inv(k)`` until terms drop below eps."""
    total = np.zeros_like(powers_of_inv(0))
    term = total
    for k in range(acc.max_bernoulli_terms):
        term = coefs[k] * powers_of_inv(k)
        total = total + term
        if np.all(np.abs(term) <= _EPS * np.abs(total)):
            return total
    if np.any(np.abs(term) > acc.rel_tol * np.abs(total)):
        raise ConvergenceError("asymptotic series did not converge; raise shift_threshold")
    return total


def _zeta_minus_one(k, terms=1000):
    """zeta(k) - 1 by direct summation with an Euler-Maclaurin tail."""
    head = math.fsum(j**-k for j in range(2, terms))
    n = terms
    return head + n ** (1 - k) / (k - 1) + 0.5 * n**-k + k / 12.0 * n ** (-k - 1)


# (-1)^k (zeta(k) - 1) / k for k = 2..31
_LGAMMA1P_COEFS = tuple((-1) ** k * _zeta_minus_one(k) / k for k in range(2, 32))


def _lgamma1p_series(z):
    """ln Gamma(1 + z) for |z| <= 1/2.

    -ln(1+z) + (1-gamma) z + sum_k (-1)^k (zeta(k)-1) z^k / k; exact zero at z = 0.
    """
    acc = np.zeros_like(z)
    for c in reversed(_LGAMMA1P_COEFS):
        acc = (acc + c) * z
    return -np.log1p(z) + z * (1.0 - EULER_GAMMA) + acc * z


def lgamma(x, acc: Accuracy = DEFAULT_ACCURACY):
    """ln Gamma(x) for x > 0.

    Near the zeros at x = 1 and x = 2 a Taylor series replaces the shifted
    asymptotic expansion, which would cancel to an absolute error of ~1e-15.
    """
    arr = _prepare(x)
    near_one = (arr >= 0.5) & (arr <= 1.5)
    near_two = (arr > 1.5) & (arr <= 2.5)
    z = np.where(near_one, arr - 1.0, np.where(near_two, arr - 2.0, 0.0))
    local = _lgamma1p_series(z) + np.where(near_two, np.log1p(z), 0.0)
    out = np.where(near_one | near_two, local, _lgamma_shifted(arr, acc))
    return _finish(out, x)


def _lgamma_shifted(arr, acc):
    n = _shift(arr, acc.shift_threshold)
    # ln Gamma(x) = ln Gamma(x+N) - ln(x (x+1) ... (x+N-1))
    prod = np.ones_like(arr)
    for k in range(int(n.max(initial=0))):
        prod = np.where(k < n, prod * (arr + k), prod)
    z = arr + n
    inv = 1.0 / z
    inv2 = inv * inv
    coefs = [b / ((2 * k + 2) * (2 * k + 1)) for k, b in enumerate(BERNOULLI)]
    tail = _series(coefs, lambda k: inv * inv2**k, acc)
    return (z - 0.5) * np.log(z) - z + HALF_LOG_2PI + tail - np.log(prod)


def digamma(x, acc: Accuracy = DEFAULT_ACCURACY):
    """psi(x) = d/dx ln Gamma(x) for x > 0."""
    arr = _prepare(x)
    n = _shift(arr, acc.shift_threshold)
    acc_sum = np.zeros_like(arr)
    for k in range(int(n.max(initial=0))):
        acc_sum = np.where(k < n, acc_sum + 1.0 / (arr + k), acc_sum)
    z = arr + n
    inv = 1.0 / z
    inv2 = inv * inv
    coefs = [b / (2 * k + 2) for k, b in enumerate(BERNOULLI)]
    tail = _series(coefs, lambda k: inv2 ** (k + 1), acc)
    out = np.log(z) - 0.5 * inv - tail - acc_sum
    return _finish(out, x)


def polygamma(order: int, x, acc: Accuracy = DEFAULT_ACCURACY):
    """psi^(order)(x) for order >= 1 and x > 0.

    The sign of the result is (-1)^(order+1).
    """
    if isinstance(order, bool) or int(order) != order or order < 1:
        raise DomainError(f"polygamma order must be an integer >= 1, got {order!r}")
    order = int(order)
    arr = _prepare(x)
    n = _shift(arr, acc.shift_threshold)
    # psi^(n)(x) = psi^(n)(x+N) - (-1)^n n! sum_k 1/(x+k)^(n+1)
    recur = np.zeros_like(arr)
    for k in range(int(n.max(initial=0))):
        recur = np.where(k < n, recur + (arr + k) ** -(order + 1), recur)
    z = arr + n
    inv = 1.0 / z
    inv2 = inv * inv
    fact = math.factorial
    lead = fact(order - 1) * inv**order + 0.5 * fact(order) * inv ** (order + 1)
    coefs = [
        b * (fact(2 * k + order + 1) / fact(2 * k + 2)) for k, b in enumerate(BERNOULLI)
    ]
    tail = _series(coefs, lambda k: inv**order * inv2 ** (k + 1), acc)
    sign = -1.0 if order % 2 == 0 else 1.0
    out = sign * (lead + tail) - (-sign) * fact(order) * recur
    return _finish(out, x)


def expm1_recip(x):
    """1/(e^x - 1) for x > 0, stable at both ends of the range."""
    arr = np.asarray(x, dtype=float)
    if np.any(~(arr > 0)):
        raise DomainError(f"argument must be positive, got {x!r}")
    if arr.ndim == 0:
        v = float(arr)
        if v < 1e-4:
            return 1.0 / v - 0.5 + v / 12.0 - v**3 / 720.0
        return math.exp(-v) / -math.expm1(-v)
    small = arr < 1e-4
    if not small.any():
        # exp(-x) underflows quietly to 0 for huge x
        return np.exp(-arr) / -np.expm1(-arr)
    out = np.empty_like(arr)
    xs = arr[small]
    out[small] = 1.0 / xs - 0.5 + xs / 12.0 - xs**3 / 720.0
    xl = arr[~small]
    out[~small] = np.exp(-xl) / -np.expm1(-xl)
    return out


# beta(t) = sum_{k>=1} B_2k t^(2k-2) / (2k)!, radius of convergence 2*pi
_BINET_TAYLOR = tuple(b / math.factorial(2 * k + 2) for k, b in enumerate(BERNOULLI))


def binet_density(t):
    """(1/t) * (1/(e^t - 1) - 1/t + 1/2), the Binet remainder density."""
    arr = np.asarray(t, dtype=float)
    if np.any(~(arr > 0)):
        raise DomainError(f"argument must be positive, got {t!r}")
    small = arr < 1.0
    ts = np.where(small, arr, 0.5)
    t2 = ts * ts
    series = np.zeros_like(ts)
    for c in reversed(_BINET_TAYLOR):
        series = series * t2 + c
    tl = np.where(small, 1.0, arr)
    with np.errstate(over="ignore"):
        direct = (np.exp(-tl) / -np.expm1(-tl) - 1.0 / tl + 0.5) / tl
    return _finish(np.where(small, series, direct), t)
