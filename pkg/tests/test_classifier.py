import numpy as np
import pytest
from sklearn.base import clone

from uclassify.classifier import UClassifier, distance_form_score
from uclassify.data import LabeledDataset, ValidationError
from uclassify.estimators import estimate_moments
from uclassify.ustat import InsufficientSamplesError, build_gram, u_one_sample_oracle


def dataset(*mats, labels=None):
    labels = labels or tuple(str(i + 1) for i in range(len(mats)))
    return LabeledDataset(tuple(labels), tuple(np.asarray(m, dtype=float) for m in mats))


def fit(*mats, labels=None):
    return UClassifier.from_dataset(dataset(*mats, labels=labels))


def test_fit_constant_classes():
    model = fit(np.zeros((2, 3)), np.ones((2, 3)))
    np.testing.assert_array_equal(model.centroids_[0], [0, 0, 0])
    np.testing.assert_array_equal(model.centroids_[1], [1, 1, 1])
    np.testing.assert_allclose(model.u_stats_, [0.0, 1.0])


def test_fit_three_classes_order_preserved(rng):
    X = np.vstack([rng.standard_normal((3, 4)) + m for m in (0, 5, 10)])
    y = np.array(["zebra"] * 3 + ["ant"] * 3 + ["moth"] * 3)
    model = UClassifier().fit(X, y)
    assert list(model.classes_) == ["zebra", "ant", "moth"]


def test_fit_u_matches_oracle(rng):
    X1 = rng.standard_normal((4, 6))
    X2 = rng.standard_normal((3, 6))
    model = fit(X1, X2)
    assert model.u_stats_[0] == pytest.approx(u_one_sample_oracle(X1), rel=1e-10)
    assert model.u_stats_[1] == pytest.approx(u_one_sample_oracle(X2), rel=1e-10)


def test_fit_rejects_singleton_class():
    X = np.vstack([np.zeros((2, 3)), np.ones((1, 3))])
    with pytest.raises(InsufficientSamplesError, match="'b' needs n >= 2"):
        UClassifier().fit(X, np.array(["a", "a", "b"]))


def test_discriminant_at_origin_is_minus_half_u(rng):
    model = fit(rng.standard_normal((3, 5)), rng.standard_normal((4, 5)) + 1)
    scores = model.discriminant(np.zeros(5))
    np.testing.assert_allclose(scores, -model.u_stats_ / 2.0)


def test_discriminant_constant_classes_example():
    model = fit(np.zeros((2, 3)), np.ones((2, 3)))
    scores = model.discriminant(np.ones(3))
    assert scores[0] == pytest.approx(0.0)
    assert scores[1] == pytest.approx(0.5)
    assert model.score_pair("1", "2", np.ones(3)) == pytest.approx(-0.5)


def test_pairwise_difference_equals_discriminant_difference(rng):
    model = fit(*(rng.standard_normal((4, 8)) + m for m in (0, 1, 2)))
    x0 = rng.standard_normal(8)
    scores = model.discriminant(x0)
    for i in range(3):
        for k in range(3):
            if i == k:
                continue
            pair = model.score_pair(str(i + 1), str(k + 1), x0)
            assert pair == pytest.approx(scores[i] - scores[k], abs=1e-12)


def test_score_pair_rejects_identical_classes(rng):
    model = fit(rng.standard_normal((3, 4)), rng.standard_normal((3, 4)))
    with pytest.raises(ValidationError, match="distinct"):
        model.score_pair("1", "1", np.zeros(4))
    with pytest.raises(ValidationError, match="unknown class"):
        model.score_pair("1", "9", np.zeros(4))


def test_score_pair_antisymmetry(rng):
    model = fit(rng.standard_normal((3, 6)), rng.standard_normal((5, 6)))
    for _ in range(20):
        x0 = rng.standard_normal(6) * rng.uniform(0.1, 5)
        assert model.score_pair("1", "2", x0) + model.score_pair("2", "1", x0) == 0.0


def test_score_zero_for_symmetric_construction():
    # classes mirror each other around x0 = 0 and share their U statistic
    X1 = np.array([[1.0, 2.0, 0.5], [-1.0, -2.0, -0.5]])
    X2 = -X1
    model = fit(X1, X2)
    assert model.score_pair("1", "2", np.zeros(3)) == pytest.approx(0.0, abs=1e-15)


def test_classify_centroid_of_separated_constants():
    model = fit(np.zeros((2, 4)), np.full((2, 4), 3.0))
    assert model.predict(np.zeros(4))[0] == "1"
    assert model.predict(np.full(4, 3.0))[0] == "2"


def test_classify_tie_goes_to_first_listed_class():
    X1 = np.array([[1.0, 0.0], [-1.0, 0.0]])
    X2 = np.array([[0.0, 1.0], [0.0, -1.0]])
    model = fit(X1, X2)
    x0 = np.zeros(2)
    assert model.score_pair("1", "2", x0) == 0.0
    assert model.predict(x0)[0] == "1"


def test_classify_three_classes_monte_carlo():
    rng = np.random.default_rng(42)
    p, n, reps = 500, 8, 200
    means = [np.zeros(p), np.r_[np.ones(p // 2), np.zeros(p - p // 2)], np.ones(p)]
    model = fit(*(m + rng.standard_normal((n, p)) for m in means))
    hits = 0
    for _ in range(reps):
        cls = int(rng.integers(0, 3))
        x0 = means[cls] + rng.standard_normal(p)
        hits += model.predict(x0)[0] == str(cls + 1)
    assert hits / reps >= 0.95


def test_argmax_coherent_with_pairwise_scores(rng):
    model = fit(*(rng.standard_normal((3, 7)) + m for m in (0, 0.5, 1.0)))
    for _ in range(50):
        x0 = rng.standard_normal(7) * 2
        winner = model.predict(x0)[0]
        assert all(
            model.score_pair(winner, other, x0) >= 0
            for other in model.classes_
            if other != winner
        )


def test_score_pair_unbiased_monte_carlo():
    rng = np.random.default_rng(202)
    p, n1, n2, reps = 60, 5, 7, 2000
    mu2 = np.ones(p)
    target = float(mu2 @ mu2) / (2 * p)
    vals = np.empty(reps)
    for r in range(reps):
        model = fit(rng.standard_normal((n1, p)), mu2 + rng.standard_normal((n2, p)))
        x0 = rng.standard_normal(p)
        vals[r] = model.score_pair("1", "2", x0)
    se = vals.std(ddof=1) / np.sqrt(reps)
    assert abs(vals.mean() - target) <= 3 * se  # x0 from class 1, oriented 1 vs 2


def test_score_pair_unbiased_under_unequal_covariances():
    # unbiasedness does not rest on homoscedasticity: AR(1) vs the
    # unstructured covariance with variances 1..p
    from uclassify.simulate import (
        PopulationSpec,
        build_ar1,
        build_mean_pattern,
        build_unstructured,
        stream,
    )

    p, n1, n2, reps = 60, 5, 7, 1500
    mu1, mu2 = build_mean_pattern(p)
    spec1 = PopulationSpec(mu1, build_ar1(p, 1.0, 0.5))
    spec2 = PopulationSpec(mu2, build_unstructured(p))
    target = float((mu1 - mu2) @ (mu1 - mu2)) / (2 * p)
    vals = np.empty(reps)
    for r in range(reps):
        X1 = spec1.sample(n1, stream(404, 0, r, 0))
        X2 = spec2.sample(n2, stream(404, 0, r, 1))
        x0 = spec1.sample(1, stream(404, 0, r, 2))[0]
        model = fit(X1, X2)
        vals[r] = model.score_pair("1", "2", x0)
    se = vals.std(ddof=1) / np.sqrt(reps)
    assert abs(vals.mean() - target) <= 3 * se


def test_standardized_score_zero_at_hypothesized_mean(rng):
    X1 = rng.standard_normal((5, 9))
    X2 = rng.standard_normal((5, 9)) + 2
    ds = dataset(X1, X2)
    g = build_gram(ds)
    model = UClassifier.from_dataset(ds, g)
    est = estimate_moments(g, 0, 1)
    # solve for an x0 whose pairwise score equals e0/2 exactly
    dbar = model.centroids_[0] - model.centroids_[1]
    du = (model.u_stats_[0] - model.u_stats_[1]) / 2.0
    x0 = dbar * (est.e0 / 2.0 + du) * 9 / float(dbar @ dbar)
    assert model.standardized_score(est, "1", "2", x0) == pytest.approx(0.0, abs=1e-9)


def test_standardized_score_rejects_zero_variance():
    ds = dataset(np.zeros((4, 3)), np.ones((4, 3)))
    g = build_gram(ds)
    model = UClassifier.from_dataset(ds, g)
    est = estimate_moments(g, 0, 1)
    with pytest.raises(ValidationError, match="variance"):
        model.standardized_score(est, "1", "2", np.ones(3))


def test_distance_form_equals_score_pair_constants():
    ds = dataset(np.zeros((2, 4)), np.ones((3, 4)))
    model = UClassifier.from_dataset(ds)
    x0 = np.full(4, 0.25)
    assert distance_form_score(ds, "1", "2", x0) == pytest.approx(
        model.score_pair("1", "2", x0), abs=1e-15
    )


def test_distance_form_equals_score_pair_random(rng):
    X1 = rng.standard_normal((3, 6))
    X2 = rng.standard_normal((4, 6)) + 0.5
    ds = dataset(X1, X2)
    model = UClassifier.from_dataset(ds)
    for _ in range(20):
        x0 = rng.standard_normal(6) * 3
        a = distance_form_score(ds, "1", "2", x0)
        b = model.score_pair("1", "2", x0)
        assert abs(a - b) <= 1e-10 * (1 + abs(b))


def test_distance_form_identity_heteroscedastic(rng):
    # unequal covariances: the identity is algebraic, not distributional
    X1 = rng.standard_normal((4, 5)) * 0.3
    X2 = rng.standard_normal((5, 5)) * np.linspace(0.5, 4.0, 5)
    ds = dataset(X1, X2)
    model = UClassifier.from_dataset(ds)
    x0 = rng.standard_normal(5)
    assert distance_form_score(ds, "1", "2", x0) == pytest.approx(
        model.score_pair("1", "2", x0), rel=1e-9, abs=1e-12
    )


def test_distance_form_hand_expansion_at_centroid(rng):
    # at x0 = centroid of class 1 the score expands to
    # ||xbar_1 - xbar_2||^2 / 2p + (tr_1/n_1 - tr_2/n_2) / 2p
    X1 = rng.standard_normal((4, 6))
    X2 = rng.standard_normal((5, 6)) + 1.0
    ds = dataset(X1, X2)
    x0 = X1.mean(axis=0)
    dbar = X1.mean(axis=0) - X2.mean(axis=0)
    tr1 = np.sum((X1 - X1.mean(0)) ** 2) / (4 - 1)
    tr2 = np.sum((X2 - X2.mean(0)) ** 2) / (5 - 1)
    expected = float(dbar @ dbar) / (2 * 6) + (tr1 / 4 - tr2 / 5) / (2 * 6)
    assert distance_form_score(ds, "1", "2", x0) == pytest.approx(expected, rel=1e-10)


def test_high_dimensional_separation_monte_carlo():
    # p >> n with the sparse-shift mean and two AR(1) covariances
    from uclassify.simulate import PopulationSpec, build_ar1, build_mean_pattern, stream

    p, n1, n2, reps = 1000, 5, 7, 200
    mu1, mu2 = build_mean_pattern(p)
    spec1 = PopulationSpec(mu1, build_ar1(p, 1.0, 0.3))
    spec2 = PopulationSpec(mu2, build_ar1(p, 1.0, 0.7))
    hits = 0
    for r in range(reps):
        model = fit(spec1.sample(n1, stream(8, 0, r, 0)), spec2.sample(n2, stream(8, 0, r, 1)))
        x0 = spec1.sample(1, stream(8, 0, r, 2))[0]
        hits += model.score_pair("1", "2", x0) > 0
    assert hits / reps >= 0.95


def test_dimension_mismatch_rejected(rng):
    model = fit(rng.standard_normal((3, 4)), rng.standard_normal((3, 4)))
    with pytest.raises(ValidationError, match="dimension"):
        model.predict(np.zeros(5))


def test_json_round_trip(rng):
    model = fit(rng.standard_normal((3, 5)), rng.standard_normal((4, 5)) + 1)
    back = UClassifier.from_json(model.to_json())
    X = rng.standard_normal((10, 5))
    np.testing.assert_array_equal(model.predict(X), back.predict(X))
    np.testing.assert_allclose(model.discriminant(X), back.discriminant(X))


def test_sklearn_protocol():
    model = UClassifier()
    assert model.get_params() == {}
    clone(model)  # must be cloneable for pipeline/CV composition
    rng = np.random.default_rng(0)
    X = np.vstack([rng.standard_normal((5, 10)), rng.standard_normal((5, 10)) + 4])
    y = np.array([0] * 5 + [1] * 5)
    fitted = UClassifier().fit(X, y)
    assert fitted.score(X, y) == 1.0
