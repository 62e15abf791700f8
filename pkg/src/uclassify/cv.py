"""K-fold cross-validation with pairwise misclassification counting.

The observations are partitioned uniformly at random (not stratified)
into K folds of sizes differing by at most one. For each rotation the
held-out fold is the test set. In ``pairwise`` mode every unordered
class pair is evaluated with the two-class rule on the test
observations of those two classes; in ``argmax`` mode every test
observation is classified over all classes at once.

All error counts are integers until the final division; the overall
rate is the exact fraction (total pairwise errors) / (total n), which
reproduces published whole-dataset rates where each test observation
participates in every pairwise comparison involving its class.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations

import numpy as np

from .data import LabeledDataset, ValidationError
from .ustat import InsufficientSamplesError


@dataclass(frozen=True)
class FoldAssignment:
    """Per-observation fold indices for rows in dataset (class-stacked) order."""

    fold_of: np.ndarray
    K: int
    seed: int

    def test_indices(self, k: int) -> np.ndarray:
        return np.nonzero(self.fold_of == k)[0]

    def train_indices(self, k: int) -> np.ndarray:
        return np.nonzero(self.fold_of != k)[0]


def kfold_split(dataset: LabeledDataset, K: int, seed: int, stratified: bool = False) -> FoldAssignment:
    """Random partition into K folds of sizes ceil/floor(n/K).

    The default split is uniform over all observations (class
    compositions of the folds are left random). With ``stratified``
    each class is dealt round-robin across folds after a within-class
    shuffle, keeping per-class fold counts within one of each other.
    Every class must keep at least 2 training observations in every
    rotation; a violating rotation is reported with fold and class.
    """
    n = dataset.total_n
    if K < 2:
        raise ValidationError(f"K must be >= 2, got {K}")
    if n < K:
        raise ValidationError(f"cannot split {n} observations into {K} folds")
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence((int(seed), 0xC5))))
    fold_of = np.empty(n, dtype=np.int64)
    if stratified:
        counter = 0
        offset = 0
        for cnt in dataset.counts:
            order = offset + rng.permutation(cnt)
            for row in order:
                fold_of[row] = counter % K
                counter += 1
            offset += cnt
    else:
        perm = rng.permutation(n)
        base, extra = divmod(n, K)
        start = 0
        for k in range(K):
            size = base + (1 if k < extra else 0)
            fold_of[perm[start : start + size]] = k
            start += size
    labels_per_row = np.concatenate(
        [np.full(cnt, lab, dtype=object) for lab, cnt in zip(dataset.labels, dataset.counts)]
    )
    for k in range(K):
        train = fold_of != k
        for lab in dataset.labels:
            n_train = int(np.sum(train & (labels_per_row == lab)))
            if n_train < 2:
                raise ValidationError(
                    f"rotation {k} leaves class '{lab}' with {n_train} training rows (need >= 2)"
                )
    return FoldAssignment(fold_of=fold_of, K=K, seed=int(seed))


@dataclass(frozen=True)
class CvReport:
    """Per-fold error counts, test sizes, and the exact overall rate."""

    labels: tuple[str, ...]
    K: int
    mode: str
    total_n: int
    counts: tuple[dict, ...] = field(repr=False)  # per fold: {(true, assigned): int}
    test_sizes: tuple[dict, ...] = field(repr=False)  # per fold: {label: int}
    seed: int | None = None

    @property
    def numerator(self) -> int:
        return sum(sum(c.values()) for c in self.counts)

    @property
    def overall_rate(self) -> Fraction:
        return Fraction(self.numerator, self.total_n)

    @classmethod
    def from_counts(cls, labels, counts, test_sizes, total_n, K=None, mode="pairwise") -> "CvReport":
        """Assemble a report from raw per-fold count tables (replay path)."""
        counts = tuple(dict(c) for c in counts)
        test_sizes = tuple(dict(t) for t in test_sizes)
        if K is None:
            K = len(counts)
        if len(counts) != K or len(test_sizes) != K:
            raise ValidationError("need one count table and one size table per fold")
        for c in counts:
            for (i, j), m in c.items():
                if i == j or int(m) < 0:
                    raise ValidationError(f"invalid error count entry ({i}, {j}) = {m}")
        return cls(
            labels=tuple(labels),
            K=int(K),
            mode=mode,
            total_n=int(total_n),
            counts=counts,
            test_sizes=test_sizes,
        )

    def to_json(self) -> str:
        doc = {
            "schema_version": 1,
            "labels": list(self.labels),
            "K": self.K,
            "mode": self.mode,
            "seed": self.seed,
            "total_n": self.total_n,
            "folds": [
                {
                    "fold": k,
                    "test_sizes": {lab: self.test_sizes[k].get(lab, 0) for lab in self.labels},
                    "errors": [
                        {"true": i, "assigned": j, "count": m}
                        for (i, j), m in sorted(self.counts[k].items())
                    ],
                }
                for k in range(self.K)
            ],
            "overall": {
                "numerator": self.numerator,
                "denominator": self.total_n,
                "rate": float(self.overall_rate),
            },
        }
        return json.dumps(doc, indent=2, sort_keys=True)

    def to_table(self) -> str:
        lines = [f"{self.K}-fold cross-validation ({self.mode} mode), n = {self.total_n}"]
        for row in aggregate(self):
            lines.append(
                f"  fold {row['fold']}  pair ({row['pair'][0]}, {row['pair'][1]})  "
                f"errors {row['errors']}/{row['test_size']}  rate {row['rate']:.4f}"
            )
        lines.append(
            f"overall: {self.numerator}/{self.total_n} ({float(self.overall_rate):.10g})"
        )
        return "\n".join(lines) + "\n"


def aggregate(report: CvReport) -> list[dict]:
    """Per-fold, per-pair error rates with pair test sizes.

    A fold where neither class of a pair has test observations yields
    no row (the rate is undefined there, not zero).
    """
    rows = []
    for k in range(report.K):
        sizes = report.test_sizes[k]
        for i, j in combinations(report.labels, 2):
            n_pair = sizes.get(i, 0) + sizes.get(j, 0)
            if n_pair == 0:
                continue
            m_ij = report.counts[k].get((i, j), 0)
            m_ji = report.counts[k].get((j, i), 0)
            rows.append(
                {
                    "fold": k,
                    "pair": (i, j),
                    "errors": m_ij + m_ji,
                    "errors_i_to_j": m_ij,
                    "errors_j_to_i": m_ji,
                    "test_size": n_pair,
                    "rate": (m_ij + m_ji) / n_pair,
                }
            )
    return rows


def _u_stat_from_block(G: np.ndarray, idx: np.ndarray) -> float:
    block = G[np.ix_(idx, idx)]
    n = idx.shape[0]
    if n < 2:
        raise InsufficientSamplesError("training class needs n >= 2")
    return float((block.sum() - np.trace(block)) / (n * (n - 1)))


def run_cv(
    dataset: LabeledDataset,
    K: int,
    seed: int,
    mode: str = "pairwise",
    threads: int = 1,
    stratified: bool = False,
) -> CvReport:
    """Rotate folds, fit on the remainder, count test misclassifications.

    The full-data Gram matrix is built once; every rotation works on
    index slices of it, so the data dimension is touched only once.
    """
    if mode not in ("pairwise", "argmax"):
        raise ValidationError(f"mode must be 'pairwise' or 'argmax', got '{mode}'")
    assignment = kfold_split(dataset, K, seed, stratified=stratified)
    X = np.vstack(dataset.matrices)
    G = (X @ X.T) / dataset.p
    labels_per_row = np.concatenate(
        [np.full(cnt, lab, dtype=object) for lab, cnt in zip(dataset.labels, dataset.counts)]
    )
    class_rows = {lab: np.nonzero(labels_per_row == lab)[0] for lab in dataset.labels}

    def one_fold(k: int) -> tuple[dict, dict]:
        in_test = assignment.fold_of == k
        train_rows = {lab: rows[~in_test[rows]] for lab, rows in class_rows.items()}
        test_rows = {lab: rows[in_test[rows]] for lab, rows in class_rows.items()}
        u_stats = {lab: _u_stat_from_block(G, rows) for lab, rows in train_rows.items()}
        counts: dict = {}

        def record(true_lab, assigned_lab):
            if true_lab != assigned_lab:
                key = (true_lab, assigned_lab)
                counts[key] = counts.get(key, 0) + 1

        if mode == "pairwise":
            for i, j in combinations(dataset.labels, 2):
                du = (u_stats[i] - u_stats[j]) / 2.0
                for lab in (i, j):
                    for t in test_rows[lab]:
                        score = (
                            float(G[t, train_rows[i]].mean())
                            - float(G[t, train_rows[j]].mean())
                            - du
                        )
                        record(lab, i if score >= 0.0 else j)
        else:
            order = list(dataset.labels)
            for lab in order:
                for t in test_rows[lab]:
                    scores = np.asarray(
                        [float(G[t, train_rows[c]].mean()) - u_stats[c] / 2.0 for c in order]
                    )
                    record(lab, order[int(np.argmax(scores))])
        sizes = {lab: int(rows.shape[0]) for lab, rows in test_rows.items()}
        return counts, sizes

    if threads <= 1:
        fold_results = [one_fold(k) for k in range(K)]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            fold_results = list(pool.map(one_fold, range(K)))

    return CvReport(
        labels=dataset.labels,
        K=K,
        mode=mode,
        total_n=dataset.total_n,
        counts=tuple(r[0] for r in fold_results),
        test_sizes=tuple(r[1] for r in fold_results),
        seed=int(seed),
    )
