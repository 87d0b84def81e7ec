"""Positive m x n parameter matrices and their seeded random generation."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass

import numpy as np

__all__ = ["PositiveMatrix", "random_matrix", "log_uniform"]

# Documented so external tools can regenerate the same samples.
ENTRY_RANGE = (1e-3, 1e3)


@dataclass(frozen=True, eq=False)
class PositiveMatrix:
    """The m x n matrix of positive entries (lambda_ij, or mu_ij).

    Row sums (alpha_i, nu_i) and column sums (beta_j, tau_j) are recomputed
    from the entries on access, never cached.
    """

    entries: np.ndarray

    def __post_init__(self):
        arr = np.array(self.entries, dtype=float)
        if arr.ndim != 2 or arr.size == 0:
            raise ValueError(f"entries must be a non-empty 2-D array, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)) or not np.all(arr > 0):
            raise ValueError("entries must be finite and strictly positive")
        arr.setflags(write=False)
        object.__setattr__(self, "entries", arr)

    @classmethod
    def from_rows(cls, rows) -> "PositiveMatrix":
        return cls(np.asarray(rows, dtype=float))

    @property
    def m(self) -> int:
        return self.entries.shape[0]

    @property
    def n(self) -> int:
        return self.entries.shape[1]

    @property
    def row_sums(self) -> np.ndarray:
        return self.entries.sum(axis=1)

    @property
    def col_sums(self) -> np.ndarray:
        return self.entries.sum(axis=0)

    @property
    def total(self) -> float:
        return float(self.entries.sum())

    def scaled(self, c: float) -> "PositiveMatrix":
        return PositiveMatrix(self.entries * c)

    def normalized(self) -> "PositiveMatrix":
        return self.scaled(1.0 / self.total)

    def to_list(self) -> list:
        return self.entries.tolist()

    def digest(self, *extra) -> str:
        payload = json.dumps([self.to_list(), *extra], separators=(",", ":"))
        return hashlib.sha256(payload.encode()).hexdigest()[:12]

    def __eq__(self, other):
        if not isinstance(other, PositiveMatrix):
            return NotImplemented
        return np.array_equal(self.entries, other.entries)

    def __hash__(self):
        return hash(self.entries.tobytes())

    def __repr__(self):
        return f"PositiveMatrix({self.to_list()!r})"


def log_uniform(rng: np.random.Generator, low: float, high: float, size=None):
    return np.exp(rng.uniform(np.log(low), np.log(high), size=size))


def random_matrix(rng: np.random.Generator, m: int, n: int, low=ENTRY_RANGE[0],
                  high=ENTRY_RANGE[1]) -> PositiveMatrix:
    """Entries drawn independently log-uniform on [low, high]."""
    return PositiveMatrix(log_uniform(rng, low, high, size=(m, n)))
