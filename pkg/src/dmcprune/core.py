"""Core types and divergences for finite discrete memoryless channels.

A channel is a row-stochastic matrix: row x is the conditional output law
W(.|x).  All divergences are computed in nats.  Support violations are
reported through the INFINITE sentinel (math.inf), never through float
exceptions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

INFINITE = math.inf

MAX_ALPHABET = 4096
INGEST_ROW_SUM_TOL = 1e-9
INTERNAL_SUM_TOL = 1e-12


class DmcError(Exception):
    """Base class for all domain errors raised by this package."""


class EmptyMatrix(DmcError):
    pass


class AlphabetTooLarge(DmcError):
    pass


class NegativeEntry(DmcError):
    def __init__(self, row: int, col: int):
        self.row = row
        self.col = col
        super().__init__(f"negative entry at row {row}, column {col}")


class RowSumError(DmcError):
    def __init__(self, row: int, total: float):
        self.row = row
        self.total = total
        super().__init__(f"row {row} sums to {total!r}, not 1")


class DimensionMismatch(DmcError):
    pass


class IndexOutOfRange(DmcError):
    pass


class InvalidSubset(DmcError):
    pass


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.float64)
    a.setflags(write=False)
    return a


def _check_matrix(matrix: np.ndarray, row_sum_tol: float, max_alphabet: int) -> None:
    if matrix.ndim != 2 or matrix.size == 0:
        raise EmptyMatrix("channel matrix must be 2-D and non-empty")
    m, n = matrix.shape
    if m > max_alphabet or n > max_alphabet:
        raise AlphabetTooLarge(f"alphabet sizes {m}x{n} exceed limit {max_alphabet}")
    if not np.all(np.isfinite(matrix)):
        bad = np.argwhere(~np.isfinite(matrix))[0]
        raise NegativeEntry(int(bad[0]), int(bad[1]))
    neg = np.argwhere(matrix < 0)
    if neg.size:
        raise NegativeEntry(int(neg[0, 0]), int(neg[0, 1]))
    sums = matrix.sum(axis=1)
    bad = np.flatnonzero(np.abs(sums - 1.0) > row_sum_tol)
    if bad.size:
        r = int(bad[0])
        raise RowSumError(r, float(sums[r]))


@dataclass(frozen=True)
class Channel:
    """Immutable row-stochastic transition matrix over finite alphabets."""

    matrix: np.ndarray

    def __post_init__(self):
        matrix = np.ascontiguousarray(np.asarray(self.matrix), dtype=np.float64)
        _check_matrix(matrix, INGEST_ROW_SUM_TOL, MAX_ALPHABET)
        matrix.setflags(write=False)
        object.__setattr__(self, "matrix", matrix)

    @property
    def num_inputs(self) -> int:
        return self.matrix.shape[0]

    @property
    def num_outputs(self) -> int:
        return self.matrix.shape[1]

    def row(self, x: int) -> np.ndarray:
        return self.matrix[x]

    def __eq__(self, other) -> bool:
        return isinstance(other, Channel) and self.matrix.shape == other.matrix.shape \
            and bool(np.array_equal(self.matrix, other.matrix))

    def __repr__(self) -> str:
        return f"Channel({self.num_inputs}x{self.num_outputs})"


def validate_channel(raw_matrix, max_alphabet: int = MAX_ALPHABET) -> Channel:
    """Validate an externally supplied matrix and wrap it as a Channel.

    No silent normalization: rows whose sums deviate from 1 by more than
    1e-9 are rejected with RowSumError.
    """
    arr = np.asarray(raw_matrix, dtype=np.float64)
    _check_matrix(arr, INGEST_ROW_SUM_TOL, max_alphabet)
    return Channel(arr)


def input_subset(indices, num_inputs: int) -> tuple[int, ...]:
    """Canonicalize a collection of input indices to a strictly increasing tuple."""
    idx = [int(i) for i in indices]
    if not idx:
        raise InvalidSubset("input subset must be non-empty")
    if len(set(idx)) != len(idx):
        raise InvalidSubset(f"duplicate indices in subset {idx}")
    for i in idx:
        if not 0 <= i < num_inputs:
            raise IndexOutOfRange(f"index {i} outside [0, {num_inputs})")
    return tuple(sorted(idx))


def restrict(channel: Channel, indices) -> Channel:
    """Sub-channel keeping only the given input rows (ascending order)."""
    subset = input_subset(indices, channel.num_inputs)
    return Channel(channel.matrix[list(subset)])


def _as_pair(p, q) -> tuple[np.ndarray, np.ndarray]:
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.shape != q.shape or p.ndim != 1:
        raise DimensionMismatch(f"shapes {p.shape} and {q.shape} differ")
    return p, q


def entropy(p) -> float:
    """Shannon entropy -sum p log p in nats, with 0 log 0 = 0."""
    p = np.asarray(p, dtype=np.float64)
    mask = p > 0
    return max(0.0, float(-np.sum(p[mask] * np.log(p[mask]))))


def kl_divergence(p, q) -> float:
    """KL divergence D(P||Q) in nats; INFINITE iff P puts mass where Q has none."""
    p, q = _as_pair(p, q)
    mask = p > 0
    if np.any(q[mask] <= 0.0):
        return INFINITE
    pm = p[mask]
    return max(0.0, float(np.sum(pm * (np.log(pm) - np.log(q[mask])))))


def chi2_divergence(p, q) -> float:
    """Chi-squared divergence sum P^2/Q - 1; INFINITE iff P puts mass where Q has none.

    Terms with P(y) = Q(y) = 0 contribute 0.
    """
    p, q = _as_pair(p, q)
    if np.any((p > 0) & (q <= 0.0)):
        return INFINITE
    qm = q > 0
    return max(0.0, float(np.sum(p[qm] * p[qm] / q[qm]) - 1.0))


def js_divergence(p, q) -> float:
    """Jensen-Shannon divergence in nats: always finite, symmetric, <= log 2."""
    p, q = _as_pair(p, q)
    m = 0.5 * (p + q)
    return max(0.0, 0.5 * kl_divergence(p, m) + 0.5 * kl_divergence(q, m))
