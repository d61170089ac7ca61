import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bankcf.balancing import (
    BalancingStrategy,
    LabeledMatrix,
    apply_strategy,
    cost_sensitive_weights,
    oversample,
    smote,
    undersample,
)
from bankcf.errors import BalancingError, ParameterError, UnsupportedFeatureError


def imbalanced(n_neg=90, n_pos=10, d=3, seed=0):
    rng = np.random.default_rng(seed)
    X = np.vstack([rng.normal(0, 1, (n_neg, d)), rng.normal(3, 1, (n_pos, d))])
    y = np.concatenate([np.zeros(n_neg, int), np.ones(n_pos, int)])
    return LabeledMatrix(X, y)


def row_multiset(data):
    return sorted(map(tuple, np.column_stack([data.features, data.labels]).tolist()))


class TestUndersample:
    def test_counts(self):
        out = undersample(imbalanced(), seed=1)
        assert np.bincount(out.labels).tolist() == [10, 10]

    def test_balanced_input_unchanged(self):
        data = imbalanced(50, 50)
        assert row_multiset(undersample(data, seed=1)) == row_multiset(data)

    def test_deterministic(self):
        data = imbalanced()
        a, b = undersample(data, seed=5), undersample(data, seed=5)
        assert np.array_equal(a.features, b.features)

    def test_no_synthesis(self):
        data = imbalanced()
        out = undersample(data, seed=2)
        source = set(map(tuple, data.features.tolist()))
        assert all(tuple(row) in source for row in out.features.tolist())

    def test_single_label_rejected(self):
        with pytest.raises(BalancingError):
            undersample(LabeledMatrix(np.zeros((5, 2)), np.zeros(5, int)), 0)


class TestOversample:
    def test_counts(self):
        out = oversample(imbalanced(), seed=1)
        assert np.bincount(out.labels).tolist() == [90, 90]

    def test_minority_rows_are_copies(self):
        data = imbalanced()
        out = oversample(data, seed=1)
        source = set(map(tuple, data.features[data.labels == 1].tolist()))
        produced = out.features[out.labels == 1]
        assert all(tuple(row) in source for row in produced.tolist())

    def test_balanced_fixed_point(self):
        data = imbalanced(40, 40)
        out = oversample(data, seed=9)
        assert row_multiset(out) == row_multiset(data)


def smote_segment_oracle(data, out, k):
    """Brute-force check: every synthetic row sits on a segment between a
    minority row and one of its k nearest minority rows (standardized
    euclidean neighbors), confirmed by solving for lambda on each pair."""
    minority = data.features[data.labels == 1]
    mean = data.features.mean(axis=0)
    std = data.features.std(axis=0)
    std[std == 0.0] = 1.0
    scaled = (minority - mean) / std
    n = len(minority)
    synthetic = out.features[len(data.features):]
    for s in synthetic:
        found = False
        for i in range(n):
            dists = [
                (float(np.linalg.norm(scaled[i] - scaled[j])) if j != i else np.inf, j)
                for j in range(n)
            ]
            neighbors = [j for _, j in sorted(dists, key=lambda t: t[0])[:k]]
            for j in neighbors:
                x, x_nn = minority[i], minority[j]
                direction = x_nn - x
                moved = s - x
                lams = [
                    moved[c] / direction[c]
                    for c in range(len(direction))
                    if direction[c] != 0
                ]
                if not lams:
                    if np.allclose(moved, 0):
                        found = True
                        break
                    continue
                lam = lams[0]
                if 0.0 <= lam <= 1.0 and np.allclose(x + lam * direction, s, atol=1e-9):
                    found = True
                    break
            if found:
                break
        if not found:
            return False
    return True


class TestSmote:
    def test_counts(self):
        out = smote(imbalanced(), k=5, seed=1)
        assert np.bincount(out.labels).tolist() == [90, 90]
        assert len(out) == 180

    def test_convex_combination_two_points(self):
        X = np.array([[0.0, 0.0], [1.0, 1.0], [5.0, 5.0], [6.0, 6.0], [7.0, 7.0]])
        y = np.array([1, 1, 0, 0, 0])
        out = smote(LabeledMatrix(X, y), k=1, seed=3)
        synthetic = out.features[5:]
        # with two minority points, every synthetic point lies on their segment
        for s in synthetic:
            assert s[0] == pytest.approx(s[1])
            assert 0.0 <= s[0] <= 1.0

    def test_segment_membership_bruteforce(self):
        data = imbalanced(80, 20, d=4, seed=3)
        out = smote(data, k=5, seed=11)
        assert smote_segment_oracle(data, out, k=5)

    def test_k_too_large(self):
        with pytest.raises(ParameterError):
            smote(imbalanced(n_pos=5), k=5, seed=0)

    def test_non_finite_rejected(self):
        X = np.array([[0.0, np.nan], [1.0, 1.0], [2.0, 2.0], [3.0, 3.0]])
        y = np.array([1, 1, 0, 0])
        with pytest.raises(UnsupportedFeatureError):
            smote(LabeledMatrix(X, y), k=1, seed=0)

    def test_deterministic(self):
        data = imbalanced()
        a, b = smote(data, 5, seed=4), smote(data, 5, seed=4)
        assert np.array_equal(a.features, b.features)


class TestCostSensitive:
    def test_stated_formula(self):
        labels = np.concatenate([np.zeros(90, int), np.ones(10, int)])
        weights = cost_sensitive_weights(labels).weights
        assert weights[0] == pytest.approx(100 / 180)
        assert weights[-1] == pytest.approx(5.0)

    def test_balanced_all_ones(self):
        labels = np.concatenate([np.zeros(50, int), np.ones(50, int)])
        assert np.allclose(cost_sensitive_weights(labels).weights, 1.0)

    def test_equal_mass_per_label(self):
        labels = np.concatenate([np.zeros(90, int), np.ones(10, int)])
        weights = cost_sensitive_weights(labels).weights
        assert weights[labels == 0].sum() == pytest.approx(weights[labels == 1].sum())

    def test_single_label_rejected(self):
        with pytest.raises(BalancingError):
            cost_sensitive_weights(np.ones(5, int))


class TestApplyStrategy:
    def test_original_identity(self):
        data = imbalanced()
        out, weights = apply_strategy(data, BalancingStrategy("original"))
        assert out is data
        assert np.allclose(weights.weights, 1.0) and len(weights) == 100

    def test_cost_sensitive_keeps_rows(self):
        data = imbalanced()
        out, weights = apply_strategy(data, BalancingStrategy("cost_sensitive"))
        assert out is data
        assert weights.weights[-1] == pytest.approx(5.0)

    def test_smote_dispatch(self):
        out, weights = apply_strategy(imbalanced(), BalancingStrategy("smote", smote_k=5))
        assert len(out) == 180 and len(weights) == 180

    def test_unknown_tag_rejected(self):
        with pytest.raises(ParameterError):
            BalancingStrategy("bogus")


@settings(max_examples=30, deadline=None)
@given(
    n_neg=st.integers(min_value=8, max_value=40),
    n_pos=st.integers(min_value=7, max_value=40),
    tag=st.sampled_from(["undersampling", "oversampling", "smote"]),
    seed=st.integers(min_value=0, max_value=2**31 - 1),
)
def test_resampling_always_balances(n_neg, n_pos, tag, seed):
    data = imbalanced(n_neg, n_pos, seed=seed % 1000)
    out, weights = apply_strategy(data, BalancingStrategy(tag, smote_k=5, seed=seed))
    counts = np.bincount(out.labels, minlength=2)
    assert counts[0] == counts[1]
    assert np.all(weights.weights == 1.0)


@settings(max_examples=30, deadline=None)
@given(
    n_neg=st.integers(min_value=1, max_value=60),
    n_pos=st.integers(min_value=1, max_value=60),
)
def test_cost_weights_equalize_label_mass(n_neg, n_pos):
    labels = np.concatenate([np.zeros(n_neg, int), np.ones(n_pos, int)])
    weights = cost_sensitive_weights(labels).weights
    assert weights[labels == 0].sum() == pytest.approx(weights[labels == 1].sum())
    assert weights.sum() == pytest.approx(len(labels))
