import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

import oracles
from mmreid.core import (DistanceMap, EmbeddingSet, LossConfig, MiniBatch, Modality, ReRankConfig, SampleRecord,
                         euclidean_distance, pairwise_distances)
from mmreid.errors import ConfigError, DimensionMismatch


def test_distance_345():
    assert euclidean_distance([0, 0], [3, 4]) == 5.0


def test_distance_identity():
    assert euclidean_distance([1.5, -2], [1.5, -2]) == 0.0


def test_distance_hand_value():
    assert euclidean_distance([1, 1, 1], [2, 3, 5]) == pytest.approx(math.sqrt(21), rel=1e-15)
    assert euclidean_distance([1, 1, 1], [2, 3, 5]) == pytest.approx(4.58257569495584, abs=1e-12)


def test_distance_mismatch_names_lengths():
    with pytest.raises(DimensionMismatch) as exc:
        euclidean_distance([1, 2], [1, 2, 3])
    assert "2" in str(exc.value) and "3" in str(exc.value)


def test_modality_ordering():
    assert Modality.VISIBLE < Modality.INFRARED
    assert len(Modality) == 2
    assert Modality.parse("I") is Modality.INFRARED
    assert Modality.parse(0) is Modality.VISIBLE
    with pytest.raises(ConfigError):
        Modality.parse("X")


def test_single_sample_map():
    s = EmbeddingSet([[0.3, 0.4]], [7], [0])
    m = pairwise_distances(s, s)
    assert m.entries.tolist() == [[0.0]]
    assert not m.scaled


def test_two_point_map():
    s = EmbeddingSet([[0.0], [1.0]], [0, 1], [0, 1])
    m = pairwise_distances(s, s)
    assert m.entries.tolist() == [[0.0, 1.0], [1.0, 0.0]]
    assert m.row_modality.tolist() == [0, 1]


def test_map_equals_double_loop_exactly():
    rng = np.random.default_rng(5)
    a = EmbeddingSet(rng.standard_normal((5, 9)), np.arange(5), [0, 1, 0, 1, 0])
    b = EmbeddingSet(rng.standard_normal((7, 9)), np.arange(7), [1] * 7)
    m = pairwise_distances(a, b)
    for i in range(5):
        for j in range(7):
            assert m.entries[i, j] == oracles.dist(a.features[i].tolist(), b.features[j].tolist())
            assert m.entries[i, j] == euclidean_distance(a.features[i], b.features[j])


def test_map_rejects_empty_and_mismatch():
    a = EmbeddingSet(np.zeros((2, 3)), [0, 1], [0, 0])
    with pytest.raises(ConfigError):
        pairwise_distances(a, a.subset([]))
    with pytest.raises(DimensionMismatch):
        pairwise_distances(a, EmbeddingSet(np.zeros((2, 4)), [0, 1], [0, 0]))


@settings(max_examples=50, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(1, 12), st.integers(1, 6)),
              elements=st.floats(-1e3, 1e3, allow_nan=False)))
def test_self_map_symmetric_zero_diagonal(X):
    s = EmbeddingSet(X, np.zeros(len(X), dtype=int), [0] * len(X))
    e = pairwise_distances(s, s).entries
    assert np.array_equal(e, e.T)
    assert np.all(np.diag(e) == 0)


@settings(max_examples=200, deadline=None)
@given(arrays(np.float64, (3, 4), elements=st.floats(-100, 100, allow_nan=False)))
def test_triangle_inequality(P):
    ab = euclidean_distance(P[0], P[1])
    bc = euclidean_distance(P[1], P[2])
    ac = euclidean_distance(P[0], P[2])
    assert ac <= (ab + bc) * (1 + 1e-12) + 1e-300


def test_deterministic_bit_identical():
    rng = np.random.default_rng(0)
    s = EmbeddingSet(rng.standard_normal((40, 16)), np.arange(40), [0, 1] * 20)
    assert np.array_equal(pairwise_distances(s, s).entries, pairwise_distances(s, s).entries)


def test_embedding_set_validation():
    with pytest.raises(ConfigError):
        EmbeddingSet([[np.nan]], [0], [0])
    with pytest.raises(ConfigError):
        EmbeddingSet(np.zeros((2, 0)), [0, 1], [0, 0])
    with pytest.raises(ConfigError):
        EmbeddingSet([[1.0]], [-1], [0])
    s = EmbeddingSet(np.float32([[1.5]]), [3], ["V"], [None])
    assert s.features.dtype == np.float64
    assert s[0] == SampleRecord(3, Modality.VISIBLE, s.features[0], None) or s[0].camera is None
    with pytest.raises(ValueError):
        s.features[0, 0] = 2.0


def test_records_round_trip_and_label_compaction():
    recs = [SampleRecord(40, Modality.INFRARED, np.array([1.0, 2.0]), 3),
            SampleRecord(7, Modality.VISIBLE, np.array([0.0, 1.0]))]
    s = EmbeddingSet.from_records(recs)
    assert [r.identity for r in s.records] == [40, 7]
    assert s[0].camera == 3 and s[1].camera is None
    codes, labels = s.identity_codes()
    assert codes.tolist() == [1, 0]
    assert labels[codes].tolist() == [40, 7]


def test_minibatch_canonical_order():
    rng = np.random.default_rng(1)
    ids = [5, 2, 5, 2, 5, 2, 5, 2]
    mods = [1, 0, 0, 1, 1, 1, 0, 0]
    s = EmbeddingSet(rng.standard_normal((8, 3)), ids, mods)
    b = MiniBatch.from_set(s)
    assert (b.P, b.K) == (2, 2)
    assert b.set.identities.tolist() == [2, 2, 2, 2, 5, 5, 5, 5]
    assert b.set.modalities.tolist() == [0, 0, 1, 1, 0, 0, 1, 1]
    # stable inside each block
    assert np.array_equal(b.blocks()[0, 0], s.features[[1, 7]])
    with pytest.raises(ConfigError):
        MiniBatch(s, 2, 2)


def test_minibatch_rejects_unbalanced():
    s = EmbeddingSet(np.zeros((3, 1)), [0, 0, 0], [0, 0, 1])
    with pytest.raises(ConfigError):
        MiniBatch.from_set(s)


def test_distance_map_invariants():
    with pytest.raises(ConfigError):
        DistanceMap(np.array([[-1.0]]), [0], [0])
    with pytest.raises(ConfigError):
        DistanceMap(np.array([[np.inf]]), [0], [0])
    with pytest.raises(ConfigError):
        DistanceMap(np.zeros((0, 2)), [], [0, 0])


def test_config_defaults_and_validation():
    assert LossConfig() == LossConfig(0.3, 0.2)
    assert ReRankConfig().lam == 0.999
    with pytest.raises(ConfigError):
        LossConfig(margin=-0.1)
    with pytest.raises(ConfigError):
        LossConfig(delta=-1)
    with pytest.raises(ConfigError):
        ReRankConfig(0.0)
