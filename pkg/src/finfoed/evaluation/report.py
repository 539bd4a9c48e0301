"""Scoring a manifest subset and writing CSV/JSON reports.

Clips are always processed in sorted path order, so reports do not depend on
manifest row order. Scoring uses the posterior mean (no sampling noise).
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from ..audio import PerturbSpec, read_wav, standardize_clip
from ..audio.perturb import apply_perturbation
from ..data import DatasetManifest, ManifestEntry
from ..model import LABEL_INDEX, Model, bonafide_probability
from ..tensor import Rng
from ..training.loop import score_waves
from .metrics import auc, compute_eer

HIST_BINS = 64
CLASS_NAMES = ("bonafide", "spoof")


class EvaluationError(ValueError):
    pass


@dataclass
class ClassEntropy:
    count: int
    mean: float
    std: float
    histogram: np.ndarray     # (HIST_BINS,) counts of utterance-mean entropies
    frame_mean: np.ndarray    # (C,)
    frame_std: np.ndarray     # (C,)


@dataclass
class EvalReport:
    eer: float
    threshold: float
    n_bonafide: int
    n_spoof: int
    clips: list[str]
    labels: list[str]
    scores: np.ndarray               # (n,) bonafide probability
    log_odds: np.ndarray             # (n,) bonafide minus spoof logit; same ranking as scores
    utterance_entropy: np.ndarray    # (n,) mean frame entropy per clip
    bin_edges: np.ndarray            # (HIST_BINS + 1,) shared by both classes
    classes: dict[str, ClassEntropy]
    entropy_auc: float               # utterance entropy as a score, oriented to be >= 0.5
    gap_direction: str               # which class has the higher mean entropy
    config_hash: str

    def summary(self) -> dict:
        return {
            "eer": self.eer,
            "threshold": self.threshold,
            "counts": {"bonafide": self.n_bonafide, "spoof": self.n_spoof},
            "config_hash": self.config_hash,
        }


def config_hash(model: Model) -> str:
    text = json.dumps(model.cfg.to_dict(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]


def _subset_entries(manifest: DatasetManifest, subset: str) -> list[ManifestEntry]:
    entries = sorted(manifest.subset(subset), key=lambda e: e.path)
    if not entries:
        raise EvaluationError(f"subset {subset!r} has no clips")
    missing = [str(manifest.resolve(e)) for e in entries if not manifest.resolve(e).is_file()]
    if missing:
        raise EvaluationError(f"{len(missing)} audio file(s) missing: {', '.join(missing)}")
    return entries


def _load(manifest: DatasetManifest, entries: list[ManifestEntry], clip_samples: int) -> np.ndarray:
    return np.stack([standardize_clip(read_wav(manifest.resolve(e)), clip_samples) for e in entries])


def _histogram_edges(values: np.ndarray) -> np.ndarray:
    lo, hi = float(values.min()), float(values.max())
    if lo == hi:
        lo, hi = lo - 0.5, hi + 0.5
    return np.linspace(lo, hi, HIST_BINS + 1)


def build_report(model: Model, clips: Sequence[str], labels: Sequence[str],
                 log_odds: np.ndarray, entropies: np.ndarray) -> EvalReport:
    """Assemble a report from per-clip log-odds and (n, C) frame entropies.

    The EER is computed on the log-odds, which rank clips exactly as the
    probabilities do but cannot tie through float saturation; the threshold
    is reported as a probability.
    """
    label_idx = np.array([LABEL_INDEX[l] for l in labels])
    eer, margin_threshold = compute_eer(log_odds, label_idx)
    threshold = float(bonafide_probability(margin_threshold))
    utt = entropies.astype(np.float64).mean(axis=1)
    edges = _histogram_edges(utt)
    classes = {}
    for name in CLASS_NAMES:
        sel = label_idx == LABEL_INDEX[name]
        frames = entropies[sel].astype(np.float64)
        classes[name] = ClassEntropy(
            count=int(sel.sum()),
            mean=float(utt[sel].mean()),
            std=float(utt[sel].std()),
            histogram=np.histogram(utt[sel], bins=edges)[0],
            frame_mean=frames.mean(axis=0),
            frame_std=frames.std(axis=0),
        )
    raw_auc = auc(utt, label_idx)
    higher = "bonafide" if classes["bonafide"].mean >= classes["spoof"].mean else "spoof"
    return EvalReport(
        eer=eer, threshold=threshold,
        n_bonafide=classes["bonafide"].count, n_spoof=classes["spoof"].count,
        clips=list(clips), labels=list(labels), scores=bonafide_probability(log_odds),
        log_odds=np.asarray(log_odds, dtype=np.float64),
        utterance_entropy=utt, bin_edges=edges, classes=classes,
        entropy_auc=max(raw_auc, 1.0 - raw_auc), gap_direction=f"{higher} higher",
        config_hash=config_hash(model),
    )


def evaluate(model: Model, manifest: DatasetManifest, subset: str = "eval",
             batch_size: int = 16) -> EvalReport:
    entries = _subset_entries(manifest, subset)
    waves = _load(manifest, entries, model.cfg.clip_samples)
    margins, entropies = score_waves(model, waves, batch_size)
    return build_report(model, [e.path for e in entries], [e.label for e in entries], margins, entropies)


def entropy_stats(model: Model, manifest: DatasetManifest, subset: str = "eval") -> EvalReport:
    """Same scoring pass as ``evaluate``; callers use the entropy fields."""
    return evaluate(model, manifest, subset)


def perturb_eval(model: Model, manifest: DatasetManifest, specs: Sequence[PerturbSpec],
                 subset: str = "eval", seed: int = 0, batch_size: int = 16) -> list[tuple[PerturbSpec, float]]:
    """EER after applying each perturbation to every clip of ``subset``.

    Clip ``i`` (in sorted path order) under spec ``j`` draws from the stream
    ``Rng(seed).split(j).split(i)``.
    """
    entries = _subset_entries(manifest, subset)
    waves = _load(manifest, entries, model.cfg.clip_samples)
    labels = np.array([LABEL_INDEX[e.label] for e in entries])
    root = Rng(seed)
    rows = []
    for j, spec in enumerate(specs):
        spec_rng = root.split(j)
        perturbed = np.stack([
            standardize_clip(apply_perturbation(w, spec, spec_rng.split(i)), model.cfg.clip_samples)
            for i, w in enumerate(waves)
        ]).astype(np.float32)
        margins, _ = score_waves(model, perturbed, batch_size)
        rows.append((spec, compute_eer(margins, labels)[0]))
    return rows


# -- writers -----------------------------------------------------------------

def _fmt(x: float) -> str:
    return repr(float(x))


def _write_csv(path: Path, header: Sequence[str], rows) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    path.write_text(buf.getvalue(), encoding="utf-8")


def write_scores(report: EvalReport, path: str | Path) -> None:
    rows = ((c, l, _fmt(s), _fmt(u)) for c, l, s, u in
            zip(report.clips, report.labels, report.scores, report.utterance_entropy))
    _write_csv(Path(path), ("clip", "label", "score", "utt_entropy_mean"), rows)


def write_summary(report: EvalReport, path: str | Path) -> None:
    Path(path).write_text(json.dumps(report.summary(), indent=2, sort_keys=True) + "\n", encoding="utf-8")


def write_frame_table(report: EvalReport, path: str | Path) -> None:
    rows = []
    for name in CLASS_NAMES:
        c = report.classes[name]
        rows.extend((t, name, _fmt(m), _fmt(s)) for t, (m, s) in enumerate(zip(c.frame_mean, c.frame_std)))
    _write_csv(Path(path), ("frame_index", "class", "mean", "std"), rows)


def write_histogram(report: EvalReport, path: str | Path) -> None:
    edges = report.bin_edges
    rows = []
    for name in CLASS_NAMES:
        rows.extend((name, _fmt(edges[b]), _fmt(edges[b + 1]), int(n))
                    for b, n in enumerate(report.classes[name].histogram))
    _write_csv(Path(path), ("class", "bin_low", "bin_high", "count"), rows)


def write_entropy_summary(report: EvalReport, path: str | Path) -> None:
    doc = {
        "gap_direction": report.gap_direction,
        "entropy_auc": report.entropy_auc,
        "classes": {n: {"count": c.count, "mean": c.mean, "std": c.std} for n, c in report.classes.items()},
        "config_hash": report.config_hash,
    }
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def write_perturb_table(rows: Sequence[tuple[PerturbSpec, float]], path: str | Path) -> None:
    _write_csv(Path(path), ("spec", "eer"), ((str(s), _fmt(e)) for s, e in rows))
