import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bankcf.distances import (
    gower_cross,
    gower_distance,
    gower_matrix,
    heom_distance,
    heom_matrix,
    knn_mean_distance,
)
from bankcf.errors import ShapeError
from bankcf.schema import CATEGORICAL, FeatureSpec

SPECS5 = [FeatureSpec(f"F{j}", observed_range=(0.0, 10.0)) for j in range(5)]
MIXED = [
    FeatureSpec("num", observed_range=(0.0, 10.0)),
    FeatureSpec("cat", kind=CATEGORICAL),
]


def test_gower_identity():
    a = np.array([1.0, 2.0, 3.0, 4.0, 5.0])
    assert gower_distance(a, a, SPECS5) == 0.0


def test_gower_single_half_range_feature():
    a = np.zeros(5)
    b = np.zeros(5)
    b[2] = 5.0  # half of the observed range on one of five features
    assert gower_distance(a, b, SPECS5) == pytest.approx(0.1)


def test_gower_clips_per_feature():
    a = np.zeros(5)
    b = np.zeros(5)
    b[0] = 50.0  # five ranges away still contributes at most 1
    assert gower_distance(a, b, SPECS5) == pytest.approx(0.2)


def test_gower_categorical_indicator():
    assert gower_distance([1.0, 7.0], [1.0, 8.0], MIXED) == pytest.approx(0.5)
    assert gower_distance([1.0, 7.0], [1.0, 7.0], MIXED) == 0.0


def test_gower_zero_range_degenerates_to_indicator():
    specs = [FeatureSpec("const", observed_range=(3.0, 3.0)), FeatureSpec("free", observed_range=(0.0, 1.0))]
    assert gower_distance([3.0, 0.0], [3.0, 0.0], specs) == 0.0
    assert gower_distance([3.0, 0.0], [4.0, 0.0], specs) == pytest.approx(0.5)


def test_heom_eq3_cases():
    # categorical mismatch contributes exactly 1
    assert heom_distance([1.0, 7.0], [1.0, 8.0], MIXED) == pytest.approx(1.0)
    # numeric gap |2 - 7| over range 10 contributes 0.5
    assert heom_distance([2.0, 7.0], [7.0, 7.0], MIXED) == pytest.approx(0.5)


def test_heom_is_l1_sum_not_mean():
    a = np.zeros(5)
    b = np.full(5, 5.0)
    assert heom_distance(a, b, SPECS5) == pytest.approx(2.5)  # 5 features x 0.5 each
    assert gower_distance(a, b, SPECS5) == pytest.approx(0.5)


def test_arity_mismatch_rejected():
    with pytest.raises(ShapeError):
        gower_distance([1.0], [1.0, 2.0, 3.0, 4.0, 5.0], SPECS5)
    with pytest.raises(ShapeError):
        heom_distance([1.0, 2.0, 3.0], [1.0, 2.0, 3.0], SPECS5)


in_range = st.floats(min_value=0.0, max_value=10.0, allow_nan=False)


@settings(max_examples=200, deadline=None)
@given(
    a=st.lists(in_range, min_size=5, max_size=5),
    b=st.lists(in_range, min_size=5, max_size=5),
)
def test_distance_contracts_on_random_probes(a, b):
    g_ab = gower_distance(a, b, SPECS5)
    g_ba = gower_distance(b, a, SPECS5)
    h_ab = heom_distance(a, b, SPECS5)
    h_ba = heom_distance(b, a, SPECS5)
    assert g_ab == pytest.approx(g_ba)
    assert h_ab == pytest.approx(h_ba)
    assert 0.0 <= g_ab <= 1.0
    assert h_ab >= 0.0
    # per-feature HEOM contributions stay within [0, 1] for in-range values
    per_feature = np.abs(np.array(a) - np.array(b)) / 10.0
    assert h_ab == pytest.approx(per_feature.sum())
    assert np.all(per_feature <= 1.0)
    if a == b:
        assert g_ab == 0.0 and h_ab == 0.0
    else:
        assert g_ab > 0.0 and h_ab > 0.0


def test_batch_matches_scalar():
    rng = np.random.default_rng(0)
    A = rng.uniform(0, 10, (20, 5))
    b = rng.uniform(0, 10, 5)
    gm = gower_matrix(A, b, SPECS5)
    hm = heom_matrix(A, b, SPECS5)
    for i in range(20):
        assert gm[i] == pytest.approx(gower_distance(A[i], b, SPECS5))
        assert hm[i] == pytest.approx(heom_distance(A[i], b, SPECS5))


def test_cross_matches_matrix():
    rng = np.random.default_rng(1)
    A = rng.uniform(0, 10, (7, 5))
    B = rng.uniform(0, 10, (11, 5))
    cross = gower_cross(A, B, SPECS5)
    for i in range(7):
        assert np.allclose(cross[i], gower_matrix(B, A[i], SPECS5))


def test_knn_mean_distance_self_neighbor():
    rng = np.random.default_rng(2)
    training = rng.uniform(0, 10, (30, 5))
    assert knn_mean_distance(training[4], training, SPECS5, k=1) == 0.0
    further = knn_mean_distance(training[4], training, SPECS5, k=5)
    assert further >= 0.0
