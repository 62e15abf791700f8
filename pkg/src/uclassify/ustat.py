"""Gram-matrix machinery and the one- and two-sample U-statistics.

Every Gram entry carries the 1/p normalization, so downstream
statistics built from these blocks are already on the scale used by the
classifier. The enumeration oracles recompute the same quantities from
raw rows and exist for verification only.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data import LabeledDataset, ValidationError


class InsufficientSamplesError(ValidationError):
    """A statistic was requested with fewer observations than it needs."""


@dataclass(frozen=True)
class GramBundle:
    """All pairwise inner products x'y/p for a labeled dataset.

    ``matrix`` is the full (N, N) Gram over all observations stacked in
    class order; per-class blocks are views selected by index ranges.
    """

    labels: tuple[str, ...]
    counts: tuple[int, ...]
    p: int
    matrix: np.ndarray = field(repr=False)

    def _index(self, label_or_idx) -> int:
        if isinstance(label_or_idx, str):
            return self.labels.index(label_or_idx)
        return int(label_or_idx)

    def _slice(self, i: int) -> slice:
        start = sum(self.counts[:i])
        return slice(start, start + self.counts[i])

    def within(self, i) -> np.ndarray:
        """Within-class block G_i with (G_i)_{kr} = x_{ik}'x_{ir}/p."""
        s = self._slice(self._index(i))
        return self.matrix[s, s]

    def cross(self, i, j) -> np.ndarray:
        """Cross block C_ij with (C_ij)_{kl} = x_{ik}'x_{jl}/p."""
        si = self._slice(self._index(i))
        sj = self._slice(self._index(j))
        return self.matrix[si, sj]

    def n(self, i) -> int:
        return self.counts[self._index(i)]


def build_gram(dataset: LabeledDataset) -> GramBundle:
    """One O(N^2 p) pass over the data; everything after is O(n^k)."""
    X = np.vstack(dataset.matrices)
    G = (X @ X.T) / dataset.p
    G = np.ascontiguousarray(G)
    G.setflags(write=False)
    return GramBundle(dataset.labels, dataset.counts, dataset.p, G)


def gram_from_rows(X: np.ndarray) -> np.ndarray:
    """Single-class Gram block X X'/p for raw rows."""
    X = np.asarray(X, dtype=np.float64)
    return (X @ X.T) / X.shape[1]


def u_one_sample(G_i: np.ndarray) -> float:
    """Mean of off-diagonal Gram entries; unbiased for mu'mu/p.

    Requires n >= 2 rows.
    """
    G_i = np.asarray(G_i)
    n = G_i.shape[0]
    if n < 2:
        raise InsufficientSamplesError(f"one-sample U-statistic needs n >= 2, got n={n}")
    return float((G_i.sum() - np.trace(G_i)) / (n * (n - 1)))


def u_two_sample(C_ij: np.ndarray) -> float:
    """Mean of all cross-Gram entries; unbiased for mu_i'mu_j/p."""
    C_ij = np.asarray(C_ij)
    if C_ij.shape[0] < 1 or C_ij.shape[1] < 1:
        raise InsufficientSamplesError("two-sample U-statistic needs n_i, n_j >= 1")
    return float(C_ij.mean())


def u_one_sample_oracle(X_i: np.ndarray) -> float:
    """Direct enumeration over ordered pairs of distinct rows."""
    X_i = np.asarray(X_i, dtype=np.float64)
    n, p = X_i.shape
    if n < 2:
        raise InsufficientSamplesError(f"one-sample U-statistic needs n >= 2, got n={n}")
    total = 0.0
    for k in range(n):
        for r in range(n):
            if k != r:
                total += float(np.dot(X_i[k], X_i[r]))
    return total / (p * n * (n - 1))


def u_two_sample_oracle(X_i: np.ndarray, X_j: np.ndarray) -> float:
    """Direct enumeration over all cross pairs."""
    X_i = np.asarray(X_i, dtype=np.float64)
    X_j = np.asarray(X_j, dtype=np.float64)
    if X_i.shape[0] < 1 or X_j.shape[0] < 1:
        raise InsufficientSamplesError("two-sample U-statistic needs n_i, n_j >= 1")
    p = X_i.shape[1]
    total = 0.0
    for k in range(X_i.shape[0]):
        for l in range(X_j.shape[0]):
            total += float(np.dot(X_i[k], X_j[l]))
    return total / (p * X_i.shape[0] * X_j.shape[0])
