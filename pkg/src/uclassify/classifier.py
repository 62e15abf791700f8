"""The bias-adjusted U-classifier, two-sample and multi-sample.

The fitted state per class is just the centroid, the one-sample
U-statistic U_i (an unbiased estimate of mu_i'mu_i/p) and the class
size; no covariance matrix is ever formed or inverted. The per-class
discriminant score for a new point x0 is

    a_i(x0) = x0'xbar_i / p - U_i / 2

and the pairwise score a_i - a_k is positive when x0 leans toward
class i. Prediction is the argmax over classes, which for two classes
reproduces the sign rule on the pairwise score.
"""

from __future__ import annotations

import json

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .data import LabeledDataset, ValidationError
from .estimators import MomentEstimates
from .ustat import GramBundle, InsufficientSamplesError, build_gram, u_one_sample


class UClassifier(ClassifierMixin, BaseEstimator):
    """Linear classifier for p >> n data, valid under unequal covariances.

    The classifier has no hyperparameters. Classes are kept in order of
    first appearance in ``y``; ties in prediction go to the earliest
    class in that order.

    Attributes set by :meth:`fit`:

    classes_ : ndarray of shape (g,)
        Class labels in first-appearance order.
    centroids_ : ndarray of shape (g, p)
        Per-class sample means.
    u_stats_ : ndarray of shape (g,)
        Per-class one-sample U-statistics.
    class_counts_ : ndarray of shape (g,)
        Per-class sample sizes.
    """

    def fit(self, X, y):
        X = check_array(X, dtype=np.float64, ensure_min_samples=2)
        y = np.asarray(y)
        if y.shape[0] != X.shape[0]:
            raise ValidationError("X and y must have the same number of rows")
        labels: list = []
        for lab in y:
            if lab not in labels:
                labels.append(lab)
        if len(labels) < 2:
            raise ValidationError(f"need >= 2 classes, found only {labels}")
        centroids = []
        u_stats = []
        counts = []
        for lab in labels:
            rows = X[y == lab]
            if rows.shape[0] < 2:
                raise InsufficientSamplesError(f"class '{lab}' needs n >= 2")
            G = (rows @ rows.T) / X.shape[1]
            centroids.append(rows.mean(axis=0))
            u_stats.append(u_one_sample(G))
            counts.append(rows.shape[0])
        self.classes_ = np.asarray(labels)
        self.centroids_ = np.vstack(centroids)
        self.u_stats_ = np.asarray(u_stats)
        self.class_counts_ = np.asarray(counts)
        self.n_features_in_ = X.shape[1]
        return self

    @classmethod
    def from_dataset(cls, dataset: LabeledDataset, gram: GramBundle | None = None) -> "UClassifier":
        """Fit from a LabeledDataset, reusing a prebuilt Gram bundle."""
        if gram is None:
            gram = build_gram(dataset)
        model = cls()
        for lab, n in zip(dataset.labels, dataset.counts):
            if n < 2:
                raise InsufficientSamplesError(f"class '{lab}' needs n >= 2")
        model.classes_ = np.asarray(dataset.labels, dtype=object)
        model.centroids_ = np.vstack([m.mean(axis=0) for m in dataset.matrices])
        model.u_stats_ = np.asarray([u_one_sample(gram.within(i)) for i in range(dataset.n_classes)])
        model.class_counts_ = np.asarray(dataset.counts)
        model.n_features_in_ = dataset.p
        return model

    def _check_x0(self, X) -> tuple[np.ndarray, bool]:
        X = np.asarray(X, dtype=np.float64)
        single = X.ndim == 1
        X = np.atleast_2d(X)
        if X.shape[1] != self.n_features_in_:
            raise ValidationError(
                f"observation has dimension {X.shape[1]}, model expects {self.n_features_in_}"
            )
        if not np.all(np.isfinite(X)):
            raise ValidationError("observations contain non-finite values")
        return X, single

    def _class_index(self, label) -> int:
        matches = np.nonzero(self.classes_ == label)[0]
        if matches.size == 0:
            raise ValidationError(f"unknown class label {label!r}")
        return int(matches[0])

    def discriminant(self, X) -> np.ndarray:
        """Per-class scores a_i(x0) = x0'xbar_i/p - U_i/2.

        Returns shape (m, g) for an (m, p) input, or (g,) for a single
        observation vector.
        """
        check_is_fitted(self, "classes_")
        X, single = self._check_x0(X)
        proj = (X @ self.centroids_.T) / self.n_features_in_
        scores = proj - self.u_stats_ / 2.0
        return scores[0] if single else scores

    def score_pair(self, i, k, X):
        """Pairwise score a_i - a_k for X (antisymmetric in i, k)."""
        ii, kk = self._class_index(i), self._class_index(k)
        if ii == kk:
            raise ValidationError("score_pair needs two distinct classes")
        scores = np.atleast_2d(self.discriminant(X))
        out = scores[:, ii] - scores[:, kk]
        return float(out[0]) if np.asarray(X).ndim == 1 else out

    def predict(self, X) -> np.ndarray:
        """Argmax of per-class scores; ties go to the earliest class."""
        scores = np.atleast_2d(self.discriminant(X))
        return self.classes_[np.argmax(scores, axis=1)]

    def decision_function(self, X) -> np.ndarray:
        """Two-class signed score (first class positive); g = 2 only."""
        check_is_fitted(self, "classes_")
        if len(self.classes_) != 2:
            raise ValidationError("decision_function is defined for two classes")
        return self.score_pair(self.classes_[0], self.classes_[1], X)

    def standardized_score(self, estimates: MomentEstimates, i, k, X) -> np.ndarray:
        """Pairwise score centered and scaled by the plug-in moments.

        Under the hypothesis that x0 comes from class i (the
        first-named class) the score is centered at +e0/2 and scaled by
        sqrt(var_i).
        """
        if not estimates.var_i > 0.0:
            raise ValidationError("variance estimate is not positive; cannot standardize")
        raw = self.score_pair(i, k, X)
        return (raw - estimates.e0 / 2.0) / np.sqrt(estimates.var_i)

    def to_json(self) -> str:
        check_is_fitted(self, "classes_")
        doc = {
            "schema_version": 1,
            "p": int(self.n_features_in_),
            "classes": [
                {
                    "label": str(lab),
                    "n": int(n),
                    "u": float(u),
                    "centroid": [float(v) for v in c],
                }
                for lab, n, u, c in zip(
                    self.classes_, self.class_counts_, self.u_stats_, self.centroids_
                )
            ],
        }
        return json.dumps(doc, indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "UClassifier":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"invalid model JSON: {exc}") from exc
        for key in ("p", "classes"):
            if key not in doc:
                raise ValidationError(f"model JSON missing field '{key}'")
        model = cls()
        model.n_features_in_ = int(doc["p"])
        model.classes_ = np.asarray([c["label"] for c in doc["classes"]], dtype=object)
        model.centroids_ = np.asarray([c["centroid"] for c in doc["classes"]], dtype=np.float64)
        model.u_stats_ = np.asarray([c["u"] for c in doc["classes"]], dtype=np.float64)
        model.class_counts_ = np.asarray([c["n"] for c in doc["classes"]])
        if model.centroids_.shape[1] != model.n_features_in_:
            raise ValidationError("model JSON centroid length does not match p")
        return model


def distance_form_score(dataset: LabeledDataset, i, k, x0) -> float:
    """Pairwise score computed from squared Euclidean distances.

    Algebraically identical to the inner-product form: with dbar_i the
    mean squared distance of x0 to the class-i rows and tr_i the usual
    unbiased covariance-trace estimate,

        score = [-(dbar_i - dbar_k)/2 + (tr_i - tr_k)/2] / p.
    """
    x0 = np.asarray(x0, dtype=np.float64).ravel()
    if x0.shape[0] != dataset.p:
        raise ValidationError(
            f"observation has dimension {x0.shape[0]}, dataset has p={dataset.p}"
        )

    def _parts(label) -> tuple[float, float]:
        rows = dataset.matrix(label) if isinstance(label, str) else dataset.matrices[label]
        n = rows.shape[0]
        if n < 2:
            raise InsufficientSamplesError("distance form needs n >= 2 per class")
        dbar = float(np.mean(np.sum((rows - x0) ** 2, axis=1)))
        centered = rows - rows.mean(axis=0)
        tr = float(np.sum(centered**2)) / (n - 1)
        return dbar, tr

    dbar_i, tr_i = _parts(i)
    dbar_k, tr_k = _parts(k)
    return (-0.5 * (dbar_i - dbar_k) + 0.5 * (tr_i - tr_k)) / dataset.p
