import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from finfoed.evaluation import ScoreError, ScoreSet, auc, compute_eer

from .oracles import auc_pairwise_oracle, eer_sweep_oracle, random_scoreset


def test_perfect_separation():
    eer, _ = compute_eer([0.8, 0.9, 0.1, 0.2], ["bonafide", "bonafide", "spoof", "spoof"])
    assert eer == 0.0


def test_all_identical_scores():
    eer, _ = compute_eer([0.5] * 6, [0, 0, 0, 1, 1, 1])
    assert eer == 0.5


def test_fully_inverted_scores():
    assert compute_eer([0.1, 0.2, 0.8, 0.9], [0, 0, 1, 1])[0] == 1.0


def test_threshold_lies_between_classes_when_separated():
    eer, t = compute_eer([0.8, 0.9, 0.1, 0.2], [0, 0, 1, 1])
    assert 0.2 < t <= 0.8


def test_interpolated_crossing_hand_case():
    # thresholds 0.1..0.4: FAR 1, 1/2, 1/2, 0; FRR 0, 0, 1/2, 1/2 -> exact tie at t=0.3
    assert compute_eer([0.3, 0.4, 0.1, 0.2], [1, 0, 1, 0])[0] == pytest.approx(0.5)


def test_single_class_rejected():
    with pytest.raises(ScoreError):
        compute_eer([0.1, 0.2], [1, 1])


def test_mismatched_lengths_rejected():
    with pytest.raises(ScoreError):
        ScoreSet.from_lists([0.1, 0.2], [0])


def test_nonfinite_scores_rejected():
    with pytest.raises(ScoreError):
        compute_eer([0.1, float("nan")], [0, 1])


@pytest.mark.parametrize("seed", range(200))
def test_matches_sweep_oracle(seed):
    scores, labels = random_scoreset(np.random.default_rng(seed))
    assert abs(compute_eer(scores, labels)[0] - eer_sweep_oracle(scores, labels)) < 1e-9


@pytest.mark.parametrize("seed", range(50))
def test_auc_matches_pairwise_oracle(seed):
    scores, labels = random_scoreset(np.random.default_rng(seed))
    assert auc(scores, labels) == pytest.approx(auc_pairwise_oracle(scores, labels), abs=1e-12)


def _scoresets():
    return st.integers(0, 2**32 - 1).map(lambda s: random_scoreset(np.random.default_rng(s)))


@settings(max_examples=100, deadline=None)
@given(_scoresets())
def test_monotone_transform_invariance(pair):
    scores, labels = pair
    base = compute_eer(scores, labels)[0]
    assert compute_eer(np.exp(3 * scores) - 7, labels)[0] == base
    assert compute_eer(np.arctan(scores - 0.5), labels)[0] == base


@settings(max_examples=100, deadline=None)
@given(_scoresets())
def test_label_swap_symmetry(pair):
    scores, labels = pair
    flipped = compute_eer(1.0 - scores, 1 - labels)[0]
    assert flipped == pytest.approx(compute_eer(scores, labels)[0], abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(_scoresets())
def test_eer_in_unit_interval(pair):
    eer, _ = compute_eer(*pair)
    assert 0.0 <= eer <= 1.0
