"""Labeled/unlabeled dataset containers and CSV ingestion.

Conventions: rows are observations, columns are variables, one label
column selected by name (default ``label``). All values are parsed as
64-bit floats; an optional header row is auto-detected.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np


class ValidationError(ValueError):
    """Bad input data or parameters (maps to CLI exit code 2)."""


def _check_matrix(values: np.ndarray, what: str) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 2:
        raise ValidationError(f"{what} must be a 2-d array, got ndim={arr.ndim}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValidationError(f"{what} must have at least one row and one column")
    if not np.all(np.isfinite(arr)):
        bad = np.argwhere(~np.isfinite(arr))[0]
        raise ValidationError(
            f"{what} contains a non-finite value at row {bad[0] + 1}, column {bad[1] + 1}"
        )
    return arr


@dataclass(frozen=True)
class LabeledDataset:
    """Ordered per-class observation matrices sharing one dimension p.

    Class order is the order of first appearance of each label.
    """

    labels: tuple[str, ...]
    matrices: tuple[np.ndarray, ...] = field(repr=False)

    def __post_init__(self):
        if len(self.labels) != len(self.matrices):
            raise ValidationError("labels and matrices must have equal length")
        if len(self.labels) < 2:
            raise ValidationError("need >= 2 classes")
        if len(set(self.labels)) != len(self.labels):
            raise ValidationError("class labels must be unique")
        mats = tuple(_check_matrix(m, f"class '{lab}'") for lab, m in zip(self.labels, self.matrices))
        p = mats[0].shape[1]
        for lab, m in zip(self.labels, mats):
            if m.shape[1] != p:
                raise ValidationError(
                    f"class '{lab}' has dimension {m.shape[1]}, expected {p}"
                )
        object.__setattr__(self, "matrices", mats)

    @property
    def p(self) -> int:
        return self.matrices[0].shape[1]

    @property
    def n_classes(self) -> int:
        return len(self.labels)

    @property
    def counts(self) -> tuple[int, ...]:
        return tuple(m.shape[0] for m in self.matrices)

    @property
    def total_n(self) -> int:
        return sum(self.counts)

    def matrix(self, label: str) -> np.ndarray:
        return self.matrices[self.labels.index(label)]

    def to_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """Stack classes into (X, y) with rows in class order."""
        X = np.vstack(self.matrices)
        y = np.concatenate(
            [np.full(m.shape[0], lab, dtype=object) for lab, m in zip(self.labels, self.matrices)]
        )
        return X, y

    @classmethod
    def from_arrays(cls, X, y) -> "LabeledDataset":
        """Group rows of X by label, preserving first-appearance order."""
        X = _check_matrix(np.asarray(X, dtype=np.float64), "X")
        y = np.asarray(y)
        if y.shape[0] != X.shape[0]:
            raise ValidationError("X and y must have the same number of rows")
        labels: list[str] = []
        for lab in y:
            lab = str(lab)
            if lab not in labels:
                labels.append(lab)
        mats = tuple(X[np.asarray([str(v) for v in y]) == lab] for lab in labels)
        return cls(tuple(labels), mats)


def _sniff_rows(path) -> list[list[str]]:
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = [row for row in csv.reader(fh) if row]
    except OSError as exc:
        raise ValidationError(f"cannot read '{path}': {exc}") from exc
    return rows


def _is_number(token: str) -> bool:
    try:
        float(token)
    except ValueError:
        return False
    return True


def load_labeled_csv(path, label_column: str = "label") -> LabeledDataset:
    """Read a labeled CSV into per-class matrices.

    A header row is auto-detected (it names the label column, or is
    non-numeric in every column); with a header the label column is
    selected by name. Headerless files carry their labels in the first
    column.
    """
    rows = _sniff_rows(path)
    if not rows:
        raise ValidationError(f"'{path}' contains no rows")
    width = len(rows[0])
    for i, row in enumerate(rows):
        if len(row) != width:
            raise ValidationError(
                f"ragged row {i + 1}: expected {width} columns, found {len(row)}"
            )
    header = rows[0]
    if label_column in header:
        label_idx = header.index(label_column)
        data_rows = rows[1:]
        start_line = 2
    elif all(not _is_number(tok) for tok in header) and len(rows) > 1:
        raise ValidationError(
            f"label column '{label_column}' not found in header {header}"
        )
    else:
        label_idx = 0
        data_rows = rows
        start_line = 1
    if not data_rows:
        raise ValidationError("no observations")
    p = width - 1
    if p < 1:
        raise ValidationError("need at least one numeric column besides the label")
    values = np.empty((len(data_rows), p), dtype=np.float64)
    labels_col: list[str] = []
    for i, row in enumerate(data_rows):
        labels_col.append(row[label_idx])
        k = 0
        for j, tok in enumerate(row):
            if j == label_idx:
                continue
            if not _is_number(tok):
                raise ValidationError(
                    f"non-numeric value '{tok}' at row {start_line + i}, column {j + 1}"
                )
            values[i, k] = float(tok)
            k += 1
    order: list[str] = []
    for lab in labels_col:
        if lab not in order:
            order.append(lab)
    if len(order) < 2:
        raise ValidationError(f"need >= 2 classes, found only {order}")
    lab_arr = np.asarray(labels_col)
    mats = tuple(values[lab_arr == lab] for lab in order)
    return LabeledDataset(tuple(order), mats)


def load_unlabeled_csv(path) -> np.ndarray:
    """Read a numeric rectangular CSV into an (m, p) array of observations.

    A header row (non-numeric in every column) is skipped if present.
    """
    rows = _sniff_rows(path)
    if rows and all(not _is_number(tok) for tok in rows[0]):
        rows = rows[1:]
    if not rows:
        raise ValidationError("no observations")
    width = len(rows[0])
    out = np.empty((len(rows), width), dtype=np.float64)
    for i, row in enumerate(rows):
        if len(row) != width:
            raise ValidationError(
                f"ragged row {i + 1}: expected {width} columns, found {len(row)}"
            )
        for j, tok in enumerate(row):
            if not _is_number(tok):
                raise ValidationError(
                    f"non-numeric value '{tok}' at row {i + 1}, column {j + 1}"
                )
            out[i, j] = float(tok)
    return _check_matrix(out, "observations")


def save_labeled_csv(dataset: LabeledDataset, path, label_column: str = "label") -> None:
    """Write a dataset back to CSV; floats use shortest round-trip form."""
    p = dataset.p
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow([label_column] + [f"x{j + 1}" for j in range(p)])
        for lab, mat in zip(dataset.labels, dataset.matrices):
            for row in mat:
                writer.writerow([lab] + [repr(float(v)) for v in row])
