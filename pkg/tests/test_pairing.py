"""Unit tests for pair construction and the correlation target score."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from corrpace.errors import BatchError, ConfigError
from corrpace.pairing import (
    BimodalPair,
    PairPolarity,
    PairSet,
    correlation_score,
    generate_negative_pairs,
    generate_positive_pairs,
    label_distance,
    modality_pairs,
)
from corrpace.synth import Dataset, SampleBatch

OFFSET = 1.4  # score scale used throughout these tests

finite_labels = st.floats(min_value=-3.0, max_value=3.0, allow_nan=False)


def _batch(labels) -> SampleBatch:
    labels = np.asarray(labels, dtype=np.float64)
    return SampleBatch(np.arange(len(labels), dtype=np.int64), labels)


class TestLabelDistance:
    def test_equal_labels(self):
        assert label_distance(1.5, 1.5) == 0.0

    def test_extremes(self):
        assert label_distance(3.0, -3.0) == 6.0

    @given(finite_labels, finite_labels)
    def test_symmetric(self, a, b):
        assert label_distance(a, b) == label_distance(b, a)

    def test_rejects_nonfinite(self):
        with pytest.raises(ConfigError):
            label_distance(float("nan"), 0.0)


class TestCorrelationScore:
    def test_same_sample_is_one(self):
        assert correlation_score(4, 4, np.array([0.0] * 5), OFFSET) == 1.0

    def test_equal_label_negatives_hit_the_cap(self):
        labels = np.array([1.0, 1.0])
        assert correlation_score(0, 1, labels, OFFSET) == pytest.approx(1 / 1.4, abs=1e-12)

    def test_hand_arithmetic(self):
        labels = np.array([2.0, -1.0])
        assert correlation_score(0, 1, labels, OFFSET) == pytest.approx(1 / 4.4)

    def test_offset_must_exceed_one(self):
        with pytest.raises(ConfigError):
            correlation_score(0, 1, np.array([0.0, 1.0]), 1.0)

    @given(finite_labels, finite_labels)
    def test_negative_bounds(self, a, b):
        score = correlation_score(0, 1, np.array([a, b]), OFFSET)
        assert 0.0 < score <= 1 / OFFSET

    @given(finite_labels, finite_labels, finite_labels)
    def test_monotone_decreasing_in_distance(self, base, d1, d2):
        lo, hi = sorted([abs(d1 - base), abs(d2 - base)])
        s_near = correlation_score(0, 1, np.array([base, base + lo]), OFFSET)
        s_far = correlation_score(0, 1, np.array([base, base + hi]), OFFSET)
        if hi > lo:
            assert s_far < s_near


class TestPositivePairs:
    def test_five_samples_five_pairs(self):
        pairs = generate_positive_pairs(_batch([0.1, 0.2, 0.3, 0.4, 0.5]), 0, 1)
        assert len(pairs) == 5
        assert np.array_equal(pairs.o1, np.arange(5))
        assert np.array_equal(pairs.o2, np.arange(5))

    def test_every_target_is_one(self):
        pairs = generate_positive_pairs(_batch([-0.5, 2.0, 1.0]), 1, 2)
        assert np.all(pairs.target == 1.0)

    def test_single_sample(self):
        pairs = generate_positive_pairs(_batch([0.0]), 0, 2)
        assert len(pairs) == 1 and pairs[0].o1 == pairs[0].o2 == 0

    def test_empty_batch_rejected(self):
        with pytest.raises(BatchError):
            generate_positive_pairs(_batch([]), 0, 1)


class TestNegativePairs:
    def test_two_samples_forced_cross(self):
        rng = np.random.default_rng(0)
        pairs = generate_negative_pairs(_batch([0.0, 1.0]), 0, 1, 1.0, rng, OFFSET)
        assert len(pairs) == 2
        assert np.all(pairs.o1 != pairs.o2)

    def test_count_is_factor_times_batch(self):
        rng = np.random.default_rng(1)
        labels = np.zeros(64)
        pairs = generate_negative_pairs(_batch(labels), 0, 1, 30.0, rng, OFFSET)
        assert len(pairs) == 1920

    def test_samples_within_enumerated_candidates(self):
        # brute-force enumeration of the ordered cross pairs for n = 3
        candidates = {(a, b) for a in range(3) for b in range(3) if a != b}
        assert len(candidates) == 6
        rng = np.random.default_rng(2)
        pairs = generate_negative_pairs(_batch([0.0, 1.0, 2.0]), 0, 1, 20.0, rng, OFFSET)
        drawn = {(int(a), int(b)) for a, b in zip(pairs.o1, pairs.o2)}
        assert drawn <= candidates

    def test_targets_match_label_distances(self):
        rng = np.random.default_rng(3)
        labels = np.array([0.0, 2.0, -1.0, 0.5])
        pairs = generate_negative_pairs(_batch(labels), 0, 2, 5.0, rng, OFFSET)
        expected = 1.0 / (np.abs(labels[pairs.o1] - labels[pairs.o2]) + OFFSET)
        np.testing.assert_allclose(pairs.target, expected, rtol=0, atol=0)

    def test_single_sample_rejected(self):
        with pytest.raises(BatchError):
            generate_negative_pairs(_batch([0.0]), 0, 1, 2.0, np.random.default_rng(0), OFFSET)

    def test_determinism_given_seed(self):
        labels = np.linspace(-3, 3, 10)
        a = generate_negative_pairs(_batch(labels), 0, 1, 8.0, np.random.default_rng(42), OFFSET)
        b = generate_negative_pairs(_batch(labels), 0, 1, 8.0, np.random.default_rng(42), OFFSET)
        assert np.array_equal(a.o1, b.o1) and np.array_equal(a.o2, b.o2)
        assert np.array_equal(a.target, b.target)

    def test_global_indices_preserved(self):
        batch = SampleBatch(np.array([10, 20, 30]), np.array([0.0, 1.0, 2.0]))
        pairs = generate_negative_pairs(batch, 0, 1, 5.0, np.random.default_rng(5), OFFSET)
        assert set(pairs.o1) | set(pairs.o2) <= {10, 20, 30}


class TestPairSet:
    def test_polarity_index_consistency_enforced(self):
        with pytest.raises(ConfigError):
            PairSet(0, 1, PairPolarity.POSITIVE, [0, 1], [0, 2], [1.0, 1.0])
        with pytest.raises(ConfigError):
            PairSet(0, 1, PairPolarity.NEGATIVE, [0, 1], [0, 2], [0.5, 0.5])

    def test_positive_targets_must_be_one(self):
        with pytest.raises(ConfigError):
            PairSet(0, 1, PairPolarity.POSITIVE, [0], [0], [0.9])

    def test_same_modality_rejected(self):
        with pytest.raises(ConfigError):
            PairSet(1, 1, PairPolarity.POSITIVE, [0], [0], [1.0])

    def test_element_access_yields_pairs(self):
        ps = PairSet(0, 2, PairPolarity.NEGATIVE, [0, 1], [1, 0], [0.5, 0.25])
        pair = ps[1]
        assert isinstance(pair, BimodalPair)
        assert (pair.o1, pair.o2, pair.target) == (1, 0, 0.25)

    def test_concat_and_subset(self):
        a = PairSet(0, 1, PairPolarity.NEGATIVE, [0], [1], [0.5])
        b = PairSet(0, 1, PairPolarity.NEGATIVE, [2], [3], [0.25])
        both = PairSet.concat([a, b])
        assert len(both) == 2
        sub = both.subset(np.array([1]))
        assert sub[0].o1 == 2

    def test_concat_rejects_mixed_streams(self):
        a = PairSet(0, 1, PairPolarity.NEGATIVE, [0], [1], [0.5])
        b = PairSet(0, 2, PairPolarity.NEGATIVE, [0], [1], [0.5])
        with pytest.raises(ConfigError):
            PairSet.concat([a, b])


def test_modality_pairs_order():
    assert modality_pairs(3) == [(0, 1), (0, 2), (1, 2)]
    assert modality_pairs(2) == [(0, 1)]
