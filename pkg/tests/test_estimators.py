import numpy as np
import pytest

from uclassify.data import LabeledDataset
from uclassify.estimators import (
    e0,
    e0_oracle,
    e_cross,
    e_cross_oracle,
    e_sq,
    e_sq_oracle,
    estimate_moments,
)
from uclassify.ustat import InsufficientSamplesError, build_gram

from conftest import ar1_entries


def dataset(*mats):
    labels = tuple(str(i + 1) for i in range(len(mats)))
    return LabeledDataset(labels, tuple(np.asarray(m, dtype=float) for m in mats))


def gram_of(X):
    X = np.asarray(X, dtype=float)
    return (X @ X.T) / X.shape[1]


def test_e0_identical_constant_classes():
    ds = dataset(np.ones((4, 5)), np.ones((4, 5)))
    assert e0(build_gram(ds), 0, 1) == pytest.approx(0.0, abs=1e-14)


def test_e0_zeros_vs_ones_is_one():
    for p in (1, 3, 17):
        ds = dataset(np.zeros((3, p)), np.ones((4, p)))
        assert e0(build_gram(ds), 0, 1) == pytest.approx(1.0)


def test_e0_matches_oracle(rng):
    X1 = rng.standard_normal((4, 10))
    X2 = rng.standard_normal((5, 10)) + 0.7
    g = build_gram(dataset(X1, X2))
    assert abs(e0(g, 0, 1) - e0_oracle(X1, X2)) <= 1e-10


def test_e_sq_constant_sample_is_zero():
    X = np.tile([1.0, 2.0, 3.0], (5, 1))
    assert e_sq(gram_of(X)) == pytest.approx(0.0, abs=1e-14)


def test_e_sq_matches_brute_force():
    rng = np.random.default_rng(7)
    X = rng.integers(-4, 5, size=(4, 3)).astype(float)
    assert abs(e_sq(gram_of(X)) - e_sq_oracle(X)) <= 1e-10


def test_e_sq_monte_carlo_identity_covariance():
    rng = np.random.default_rng(99)
    p, n, reps = 20, 10, 2000
    vals = np.empty(reps)
    for r in range(reps):
        vals[r] = e_sq(gram_of(rng.standard_normal((n, p))))
    se = vals.std(ddof=1) / np.sqrt(reps)
    assert abs(vals.mean() - 0.05) <= 3 * se  # tr(I)/p^2 = 20/400


def test_e_cross_constant_class_is_zero(rng):
    ds = dataset(np.tile([2.0, 2.0], (3, 1)), rng.standard_normal((3, 2)))
    assert e_cross(build_gram(ds), 0, 1) == pytest.approx(0.0, abs=1e-14)


def test_e_cross_minimal_case_matches_single_kernel():
    rng = np.random.default_rng(11)
    X1 = rng.standard_normal((2, 6))
    X2 = rng.standard_normal((2, 6))
    g = build_gram(dataset(X1, X2))
    # with n=(2,2) all four ordered tuples carry the same squared kernel
    d1 = X1[0] - X1[1]
    d2 = X2[0] - X2[1]
    expected = (float(d1 @ d2) / 6) ** 2 / 4.0
    assert e_cross(g, 0, 1) == pytest.approx(expected, rel=1e-12)
    assert e_cross_oracle(X1, X2) == pytest.approx(expected, rel=1e-12)


def test_e_cross_monte_carlo_identity_covariance():
    rng = np.random.default_rng(98)
    p, n, reps = 20, 8, 2000
    vals = np.empty(reps)
    for r in range(reps):
        ds = dataset(rng.standard_normal((n, p)), rng.standard_normal((n, p)))
        vals[r] = e_cross(build_gram(ds), 0, 1)
    se = vals.std(ddof=1) / np.sqrt(reps)
    assert abs(vals.mean() - 0.05) <= 3 * se


def test_e_sq_and_e_cross_nonnegative_pointwise(rng):
    for _ in range(25):
        X1 = rng.standard_normal((5, 4)) * rng.uniform(0.1, 3)
        X2 = rng.standard_normal((4, 4))
        g = build_gram(dataset(X1, X2))
        assert e_sq(g.within(0)) >= 0.0
        assert e_cross(g, 0, 1) >= 0.0


def test_location_invariance(rng):
    X1 = rng.standard_normal((5, 8))
    X2 = rng.standard_normal((6, 8)) + 1.5
    c = rng.standard_normal(8) * 40.0
    g = build_gram(dataset(X1, X2))
    g_shift = build_gram(dataset(X1 + c, X2 + c))
    for fn in (lambda g_: e0(g_, 0, 1), lambda g_: e_cross(g_, 0, 1)):
        a, b = fn(g), fn(g_shift)
        assert abs(a - b) <= 1e-9 * (1 + abs(a))
    a, b = e_sq(g.within(0)), e_sq(g_shift.within(0))
    assert abs(a - b) <= 1e-9 * (1 + abs(a))


def test_estimate_moments_constant_classes():
    ds = dataset(np.zeros((4, 6)), np.ones((4, 6)))
    est = estimate_moments(build_gram(ds), 0, 1)
    assert est.mean == pytest.approx(0.5)
    assert est.var_i == pytest.approx(0.0, abs=1e-14)
    assert est.var_j == pytest.approx(0.0, abs=1e-14)


def test_estimate_moments_symmetry(rng):
    ds = dataset(rng.standard_normal((5, 7)), rng.standard_normal((6, 7)))
    g = build_gram(ds)
    a = estimate_moments(g, 0, 1)
    b = estimate_moments(g, 1, 0)
    assert a.e0 == pytest.approx(b.e0, rel=1e-12)
    assert a.var_i == pytest.approx(b.var_j, rel=1e-12)
    assert a.var_j == pytest.approx(b.var_i, rel=1e-12)
    assert a.e_ij == pytest.approx(b.e_ij, rel=1e-12)


def test_var_i_unbiased_for_sampling_variance():
    # AR(0.3) vs AR(0.7), p = 50, n = (5, 7): var_i targets
    # tr(S1^2)/n1 + tr(S1 S2)/n2 + sum_m tr(Sm^2)/(2 nm (nm-1)), all over p^2
    rng = np.random.default_rng(1234)
    p, n1, n2, reps = 50, 5, 7, 1500
    S1 = ar1_entries(p, 0.3)
    S2 = ar1_entries(p, 0.7)
    L1 = np.linalg.cholesky(S1)
    L2 = np.linalg.cholesky(S2)
    tr11, tr22, tr12 = np.sum(S1 * S1), np.sum(S2 * S2), np.sum(S1 * S2)
    target = (
        tr11 / n1 + tr12 / n2 + tr11 / (2 * n1 * (n1 - 1)) + tr22 / (2 * n2 * (n2 - 1))
    ) / p**2
    vals = np.empty(reps)
    for r in range(reps):
        X1 = rng.standard_normal((n1, p)) @ L1.T
        X2 = 1.0 + rng.standard_normal((n2, p)) @ L2.T
        vals[r] = estimate_moments(build_gram(dataset(X1, X2)), 0, 1).var_i
    se = vals.std(ddof=1) / np.sqrt(reps)
    assert abs(vals.mean() - target) <= 3 * se


def test_variance_decays_with_n():
    # Var(E0/target) at n=(5,5) should exceed 1.5x its value at n=(20,20)
    rng = np.random.default_rng(77)
    p, reps = 100, 400
    mu2 = np.ones(p)
    target = float(mu2 @ mu2) / p

    def e0_draws(n):
        out = np.empty(reps)
        for r in range(reps):
            ds = dataset(rng.standard_normal((n, p)), mu2 + rng.standard_normal((n, p)))
            out[r] = e0(build_gram(ds), 0, 1)
        return out

    var_small = np.var(e0_draws(5) / target, ddof=1)
    var_big = np.var(e0_draws(20) / target, ddof=1)
    assert var_small >= 1.5 * var_big


def test_fast_path_equals_brute_force_small_n(rng):
    for _ in range(10):
        n1 = int(rng.integers(4, 7))
        n2 = int(rng.integers(4, 7))
        p = int(rng.integers(2, 9))
        X1 = rng.normal(1.0, 2.0, size=(n1, p))
        X2 = rng.standard_normal((n2, p))
        g = build_gram(dataset(X1, X2))
        assert abs(e_sq(g.within(0)) - e_sq_oracle(X1)) <= 1e-10 * (1 + e_sq_oracle(X1))
        slow = e_cross_oracle(X1, X2)
        assert abs(e_cross(g, 0, 1) - slow) <= 1e-10 * (1 + slow)


def test_insufficient_samples_errors():
    small = dataset(np.ones((3, 4)), np.ones((5, 4)))
    g = build_gram(small)
    with pytest.raises(InsufficientSamplesError, match="n >= 4"):
        e_sq(g.within(0))
    with pytest.raises(InsufficientSamplesError, match="n >= 4"):
        estimate_moments(g, 0, 1)
    single = dataset(np.ones((2, 4)), np.ones((1, 4)))
    with pytest.raises(InsufficientSamplesError):
        e_cross(build_gram(single), 0, 1)
