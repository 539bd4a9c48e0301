"""Command-line entry point.

Exit codes: 0 success, 1 invalid input or usage, 2 runtime failure.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .audio import PerturbSpec, full_sweep
from .config import ConfigError, RunConfig, load_config, write_resolved_config
from .data import ManifestError, build_corpus, load_manifest
from .data.synth import SpoofGeneratorConfig
from .evaluation import (
    EvaluationError,
    entropy_stats,
    evaluate,
    perturb_eval,
    write_entropy_summary,
    write_frame_table,
    write_histogram,
    write_perturb_table,
    write_scores,
    write_summary,
)
from .tensor import Rng
from .training import CheckpointError, TrainingError, load_checkpoint, train

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2
CHECKPOINT_NAME = "model.iedk"
LOG_NAME = "train_log.ndjson"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _nonnegative(text: str) -> int:
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"expected a nonnegative integer, got {text}")
    return value


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="finfoed", description="Frame-entropy spoofed-audio detector on synthetic data.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen-data", help="write a synthetic WAV corpus and manifest")
    g.add_argument("--out", required=True, type=Path)
    g.add_argument("--train", type=_nonnegative, default=400)
    g.add_argument("--dev", type=_nonnegative, default=100)
    g.add_argument("--eval", type=_nonnegative, default=200)
    g.add_argument("--bonafide-fraction", type=float, default=0.1)
    g.add_argument("--latent-dim", type=int, default=8)
    g.add_argument("--seed", type=_nonnegative, default=0)

    t = sub.add_parser("train", help="train from a run config file")
    t.add_argument("--config", required=True, type=Path)
    t.add_argument("--manifest", type=Path, help="overrides [data].manifest")
    t.add_argument("--out", type=Path, help="overrides [data].out_dir")
    t.add_argument("--seed", type=_nonnegative, help="overrides the config seed")

    for name, help_text in (("eval", "score a subset; writes scores.csv and summary.json"),
                            ("entropy-stats", "per-class frame entropy tables"),
                            ("perturb-eval", "EER under duration and bitrate perturbations")):
        e = sub.add_parser(name, help=help_text)
        e.add_argument("--checkpoint", required=True, type=Path)
        e.add_argument("--manifest", required=True, type=Path)
        e.add_argument("--out", required=True, type=Path)
        e.add_argument("--subset", default="eval", choices=("train", "dev", "eval"))
        if name == "perturb-eval":
            e.add_argument("--spec", action="append", type=PerturbSpec.parse,
                           help="kind=value, e.g. duration=2 or bitrate=115; repeatable (default: full sweep)")
            e.add_argument("--seed", type=_nonnegative, default=0)

    c = sub.add_parser("gradcheck", help="finite-difference check of every differentiable op")
    c.add_argument("--seeds", type=_nonnegative, default=50)
    return p


def _gen_data(args) -> int:
    if not 0.0 <= args.bonafide_fraction <= 1.0:
        raise ValueError("--bonafide-fraction must lie in [0, 1]")
    manifest = build_corpus(
        args.out, {"train": args.train, "dev": args.dev, "eval": args.eval}, Rng(args.seed),
        bonafide_fraction=args.bonafide_fraction, spoof_cfg=SpoofGeneratorConfig(latent_dim=args.latent_dim),
    )
    print(f"wrote {len(manifest)} clips and {args.out / 'manifest.csv'}")
    return EXIT_OK


def _train(args) -> int:
    cfg: RunConfig = load_config(args.config)
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    manifest_path = args.manifest or Path(cfg.data.manifest)
    out = args.out or Path(cfg.data.out_dir)
    manifest = load_manifest(manifest_path)
    out.mkdir(parents=True, exist_ok=True)
    write_resolved_config(cfg, out)
    result = train(manifest, cfg.model, cfg.train, cfg.loss, log_path=out / LOG_NAME,
                   checkpoint_path=out / CHECKPOINT_NAME,
                   on_epoch=lambda r: print(json.dumps(r), flush=True))
    ck = result.checkpoint
    print(f"best epoch {ck.epoch}, dev EER {ck.dev_eer:.4f}; checkpoint {out / CHECKPOINT_NAME}")
    return EXIT_OK


def _evaluate(args) -> int:
    model = load_checkpoint(args.checkpoint).model
    manifest = load_manifest(args.manifest)
    args.out.mkdir(parents=True, exist_ok=True)
    if args.command == "eval":
        report = evaluate(model, manifest, args.subset)
        write_scores(report, args.out / "scores.csv")
        write_summary(report, args.out / "summary.json")
        print(f"EER {report.eer:.4f} at threshold {report.threshold:.6g} "
              f"({report.n_bonafide} bonafide, {report.n_spoof} spoof)")
    elif args.command == "entropy-stats":
        report = entropy_stats(model, manifest, args.subset)
        write_frame_table(report, args.out / "entropy_frames.csv")
        write_histogram(report, args.out / "entropy_hist.csv")
        write_entropy_summary(report, args.out / "entropy_summary.json")
        print(f"utterance entropy: {report.gap_direction}, AUC {report.entropy_auc:.4f}")
    else:
        specs = args.spec or full_sweep()
        rows = perturb_eval(model, manifest, specs, args.subset, seed=args.seed)
        write_perturb_table(rows, args.out / "perturb.csv")
        for spec, eer in rows:
            print(f"{spec}\t{eer:.4f}")
    return EXIT_OK


def _gradcheck(args) -> int:
    from .gradsuite import run_suite

    results, seconds = run_suite(range(args.seeds))
    worst: dict[str, float] = {}
    for r in results:
        worst[r.name] = max(worst.get(r.name, 0.0), r.error)
    failed = {r.name for r in results if not r.passed}
    for name, err in worst.items():
        print(f"{'FAIL' if name in failed else 'ok  '} {name:24s} max rel err {err:.2e}")
    print(f"{len(results)} checks in {seconds:.1f} s, {len(failed)} op(s) failing")
    return EXIT_RUNTIME if failed else EXIT_OK


_COMMANDS = {
    "gen-data": _gen_data,
    "train": _train,
    "eval": _evaluate,
    "entropy-stats": _evaluate,
    "perturb-eval": _evaluate,
    "gradcheck": _gradcheck,
}

_INVALID = (ConfigError, ManifestError, CheckpointError, EvaluationError, ValueError, FileNotFoundError)


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_INVALID
    except SystemExit as exc:  # --help
        return EXIT_OK if exc.code in (0, None) else EXIT_INVALID
    try:
        return _COMMANDS[args.command](args)
    except TrainingError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except _INVALID as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as exc:  # noqa: BLE001
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
