"""Unbiased, location-invariant estimators of the classifier moments.

``e0`` targets the scaled mean separation ||mu_i - mu_j||^2/p, ``e_sq``
targets tr(S_i^2)/p^2, and ``e_cross`` targets tr(S_i S_j)/p^2, where
S_i is the class-i covariance. All three are built from row-difference
kernels, so adding the same constant vector to every observation leaves
them unchanged.

The quadruple sums run over ordered tuples of pairwise-distinct
indices. With the kernel (D'_{ikr} D_{ik'r'}/p)^2 each tuple has
expectation 4 tr(S_i^2)/p^2, so the sum is divided by 4 eta(n); summing
the kernel symmetrized over the three pairings of each 4-subset and
dividing by 12 eta(n) gives the identical value.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ustat import GramBundle, InsufficientSamplesError, u_one_sample, u_two_sample


@dataclass(frozen=True)
class MomentEstimates:
    """Plug-in moment estimates for one ordered class pair (i, j).

    ``mean`` estimates the score mean for a point from class i;
    ``var_i``/``var_j`` estimate the score variance under either class.
    """

    e0: float
    e_i: float
    e_j: float
    e_ij: float
    var_i: float
    var_j: float
    n_i: int
    n_j: int

    @property
    def mean(self) -> float:
        return self.e0 / 2.0


def e0(gram: GramBundle, i, j) -> float:
    """U_i + U_j - 2 U_ij; unbiased for ||mu_i - mu_j||^2 / p."""
    G_i, G_j, C = gram.within(i), gram.within(j), gram.cross(i, j)
    return u_one_sample(G_i) + u_one_sample(G_j) - 2.0 * u_two_sample(C)


def _quad_sum_within(G: np.ndarray) -> float:
    """Sum of (G_kk' - G_kr' - G_rk' + G_rr')^2 over ordered distinct 4-tuples."""
    n = G.shape[0]
    idx = np.arange(n)
    total = 0.0
    for k in range(n):
        # axes: (r, k', r')
        t = (
            G[k][None, :, None]
            - G[k][None, None, :]
            - G[:, :, None]
            + G[:, None, :]
        )
        mask = (
            (idx[:, None, None] != k)
            & (idx[None, :, None] != k)
            & (idx[None, None, :] != k)
            & (idx[None, :, None] != idx[:, None, None])
            & (idx[None, None, :] != idx[:, None, None])
            & (idx[None, None, :] != idx[None, :, None])
        )
        total += float(np.sum(t[mask] ** 2))
    return total


def e_sq(G_i: np.ndarray) -> float:
    """Unbiased estimator of tr(S_i^2)/p^2 from the within-class Gram block.

    Needs n_i >= 4 so that four pairwise-distinct indices exist.
    """
    G_i = np.asarray(G_i)
    n = G_i.shape[0]
    if n < 4:
        raise InsufficientSamplesError(f"tr(S^2) estimator needs n >= 4, got n={n}")
    eta = n * (n - 1) * (n - 2) * (n - 3)
    return _quad_sum_within(G_i) / (4.0 * eta)


def _quad_sum_cross(C: np.ndarray) -> float:
    """Sum of (C_kl - C_ks - C_rl + C_rs)^2 over k != r, l != s."""
    n_i, n_j = C.shape
    ridx = np.arange(n_i)
    lidx = np.arange(n_j)
    total = 0.0
    for k in range(n_i):
        # axes: (r, l, s)
        t = (
            C[k][None, :, None]
            - C[k][None, None, :]
            - C[:, :, None]
            + C[:, None, :]
        )
        mask = (
            (ridx[:, None, None] != k)
            & (lidx[None, :, None] != lidx[None, None, :])
        )
        total += float(np.sum(t[mask] ** 2))
    return total


def e_cross(gram: GramBundle, i, j) -> float:
    """Unbiased estimator of tr(S_i S_j)/p^2; symmetric in (i, j)."""
    C = gram.cross(i, j)
    n_i, n_j = C.shape
    if n_i < 2 or n_j < 2:
        raise InsufficientSamplesError(
            f"tr(S_i S_j) estimator needs n_i, n_j >= 2, got ({n_i}, {n_j})"
        )
    eta = n_i * n_j * (n_i - 1) * (n_j - 1)
    return _quad_sum_cross(C) / (4.0 * eta)


def estimate_moments(gram: GramBundle, i, j) -> MomentEstimates:
    """All plug-in moment estimates for the ordered pair (i, j)."""
    n_i, n_j = gram.n(i), gram.n(j)
    if n_i < 4 or n_j < 4:
        raise InsufficientSamplesError(
            f"moment estimation needs n >= 4 per class, got ({n_i}, {n_j})"
        )
    ei = e_sq(gram.within(i))
    ej = e_sq(gram.within(j))
    eij = e_cross(gram, i, j)
    var_i = (
        ei / n_i
        + eij / n_j
        + ei / (2 * n_i * (n_i - 1))
        + ej / (2 * n_j * (n_j - 1))
    )
    var_j = (
        ej / n_j
        + eij / n_i
        + ej / (2 * n_j * (n_j - 1))
        + ei / (2 * n_i * (n_i - 1))
    )
    return MomentEstimates(
        e0=e0(gram, i, j),
        e_i=ei,
        e_j=ej,
        e_ij=eij,
        var_i=var_i,
        var_j=var_j,
        n_i=n_i,
        n_j=n_j,
    )


def e_sq_oracle(X_i: np.ndarray) -> float:
    """Brute-force recomputation of e_sq from raw rows (tests only)."""
    X_i = np.asarray(X_i, dtype=np.float64)
    n, p = X_i.shape
    if n < 4:
        raise InsufficientSamplesError(f"tr(S^2) estimator needs n >= 4, got n={n}")
    total = 0.0
    for k in range(n):
        for r in range(n):
            if r == k:
                continue
            d1 = X_i[k] - X_i[r]
            for k2 in range(n):
                if k2 in (k, r):
                    continue
                for r2 in range(n):
                    if r2 in (k, r, k2):
                        continue
                    d2 = X_i[k2] - X_i[r2]
                    total += (float(np.dot(d1, d2)) / p) ** 2
    eta = n * (n - 1) * (n - 2) * (n - 3)
    return total / (4.0 * eta)


def e_cross_oracle(X_i: np.ndarray, X_j: np.ndarray) -> float:
    """Brute-force recomputation of e_cross from raw rows (tests only)."""
    X_i = np.asarray(X_i, dtype=np.float64)
    X_j = np.asarray(X_j, dtype=np.float64)
    n_i, p = X_i.shape
    n_j = X_j.shape[0]
    if n_i < 2 or n_j < 2:
        raise InsufficientSamplesError(
            f"tr(S_i S_j) estimator needs n_i, n_j >= 2, got ({n_i}, {n_j})"
        )
    total = 0.0
    for k in range(n_i):
        for r in range(n_i):
            if r == k:
                continue
            d1 = X_i[k] - X_i[r]
            for l in range(n_j):
                for s in range(n_j):
                    if s == l:
                        continue
                    d2 = X_j[l] - X_j[s]
                    total += (float(np.dot(d1, d2)) / p) ** 2
    eta = n_i * n_j * (n_i - 1) * (n_j - 1)
    return total / (4.0 * eta)


def e0_oracle(X_i: np.ndarray, X_j: np.ndarray) -> float:
    """Brute-force e0 from raw rows (tests only)."""
    from .ustat import u_one_sample_oracle, u_two_sample_oracle

    return (
        u_one_sample_oracle(X_i)
        + u_one_sample_oracle(X_j)
        - 2.0 * u_two_sample_oracle(X_i, X_j)
    )
