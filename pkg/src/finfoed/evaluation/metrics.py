"""Equal error rate and rank-based AUC over bonafide-probability scores."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..model.network import LABEL_INDEX, BONAFIDE


class ScoreError(ValueError):
    pass


@dataclass(frozen=True)
class ScoreSet:
    scores: np.ndarray   # (n,) float64, higher means more bonafide
    labels: np.ndarray   # (n,) int, 0 bonafide / 1 spoof

    @classmethod
    def from_lists(cls, scores: Sequence[float], labels: Sequence) -> "ScoreSet":
        s = np.asarray(scores, dtype=np.float64).reshape(-1)
        lab = np.asarray([LABEL_INDEX[l] if isinstance(l, str) else int(l) for l in labels], dtype=np.int64)
        if s.shape != lab.shape:
            raise ScoreError(f"{s.size} scores but {lab.size} labels")
        if not np.all(np.isfinite(s)):
            raise ScoreError("scores must be finite")
        if np.any((lab != 0) & (lab != 1)):
            raise ScoreError("labels must be bonafide (0) or spoof (1)")
        return cls(s, lab)

    def split(self) -> tuple[np.ndarray, np.ndarray]:
        bona = self.scores[self.labels == BONAFIDE]
        spoof = self.scores[self.labels != BONAFIDE]
        if bona.size == 0 or spoof.size == 0:
            raise ScoreError(
                f"EER needs both classes; got {bona.size} bonafide and {spoof.size} spoof scores"
            )
        return bona, spoof


def _as_scoreset(scores, labels=None) -> ScoreSet:
    if isinstance(scores, ScoreSet):
        return scores
    return ScoreSet.from_lists(scores, labels)


def error_rates(bona: np.ndarray, spoof: np.ndarray, thresholds: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """FAR(t) = share of spoof scores >= t; FRR(t) = share of bonafide scores < t."""
    bona = np.sort(bona)
    spoof = np.sort(spoof)
    far = 1.0 - np.searchsorted(spoof, thresholds, side="left") / spoof.size
    frr = np.searchsorted(bona, thresholds, side="left") / bona.size
    return far, frr


def compute_eer(scores, labels=None) -> tuple[float, float]:
    """Equal error rate and the threshold where it occurs.

    Thresholds are every distinct score plus one just above the maximum, so
    the sweep runs from FAR = 1 down to FAR = 0. FAR - FRR decreases along
    it; when it skips over zero, both the rate and the threshold are
    interpolated linearly between the two neighbouring thresholds.
    """
    bona, spoof = _as_scoreset(scores, labels).split()
    distinct = np.unique(np.concatenate([bona, spoof]))
    thresholds = np.append(distinct, np.nextafter(distinct[-1], np.inf))
    far, frr = error_rates(bona, spoof, thresholds)
    diff = far - frr
    i = int(np.argmax(diff <= 0))
    if diff[i] == 0 or i == 0:
        return float(far[i]), float(thresholds[i])
    lam = diff[i - 1] / (diff[i - 1] - diff[i])
    far_x = far[i - 1] + lam * (far[i] - far[i - 1])
    frr_x = frr[i - 1] + lam * (frr[i] - frr[i - 1])
    threshold = thresholds[i - 1] + lam * (thresholds[i] - thresholds[i - 1])
    return float(0.5 * (far_x + frr_x)), float(threshold)


def auc(scores, labels=None) -> float:
    """Probability that a bonafide clip outscores a spoof clip, ties counted half."""
    bona, spoof = _as_scoreset(scores, labels).split()
    spoof_sorted = np.sort(spoof)
    below = np.searchsorted(spoof_sorted, bona, side="left")
    ties = np.searchsorted(spoof_sorted, bona, side="right") - below
    return float((below.sum() + 0.5 * ties.sum()) / (bona.size * spoof.size))
