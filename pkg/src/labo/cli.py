"""Command-line entry point.

Subcommands:
    verify   run the numeric verification suite (exit 0 iff every check passes)
    train    run a (mode x seed) comparison from a JSON config, emit CSVs,
             checkpoints, and a mean +/- std accuracy summary
    teacher  train and save a teacher checkpoint for the kd mode
    smooth   inspect the smoothing pipeline for one logit vector
    hist     dump the predicted-class confidence histogram of a checkpoint

Exit codes: 0 success, 1 verification or run failure, 2 usage/config error.
The default output directory is `labo-out`, overridable by the LABO_OUT
environment variable, which is in turn overridden by --out.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, field, replace

import numpy as np

from . import numerics
from .data import Dataset, gaussian_blobs, load_csv, load_idx
from .io import atomic_write_text, write_json
from .model import MlpModel, load_checkpoint, save_checkpoint
from .objectives import unified_objective
from .smoothing import adaptive_alpha, labo_from_logits, mix_label
from .train import (
    TRAIN_MODES,
    TrainConfig,
    evaluate,
    run_training,
    train_teacher,
    write_reports_csv,
)
from .verify import run_verification, VERIFY_SEED

__all__ = ["ExperimentConfig", "build_dataset", "main", "entrypoint"]


@dataclass(frozen=True)
class ExperimentConfig:
    """One comparison experiment: a dataset, a model, modes, and seeds."""

    dataset: dict
    hidden: list = field(default_factory=lambda: [32])
    train: TrainConfig = field(default_factory=TrainConfig)
    modes: list = field(default_factory=lambda: ["none", "ls", "labo"])
    seeds: list = field(default_factory=lambda: [1])
    out_dir: str | None = None
    teacher_checkpoint: str | None = None

    def __post_init__(self):
        if not self.modes:
            raise ValueError("need at least one mode")
        if not self.seeds:
            raise ValueError("need at least one seed")
        for mode in self.modes:
            if mode not in TRAIN_MODES:
                raise ValueError(f"unknown mode {mode!r}, expected one of {TRAIN_MODES}")

    def to_dict(self) -> dict:
        return {
            "dataset": dict(self.dataset),
            "hidden": list(self.hidden),
            "train": self.train.to_dict(),
            "modes": list(self.modes),
            "seeds": list(self.seeds),
            "out_dir": self.out_dir,
            "teacher_checkpoint": self.teacher_checkpoint,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = dict(d)
        if "train" in d and isinstance(d["train"], dict):
            d["train"] = TrainConfig.from_dict(d["train"])
        return cls(**d)

    @classmethod
    def load(cls, path: str) -> "ExperimentConfig":
        with open(path) as f:
            return cls.from_dict(json.load(f))

    def save(self, path: str) -> None:
        write_json(path, self.to_dict())


def build_dataset(spec: dict) -> Dataset:
    spec = dict(spec)
    kind = spec.pop("kind", None)
    if kind == "blobs":
        return gaussian_blobs(
            num_classes=spec.get("num_classes", 3),
            per_class=spec.get("per_class", 2000),
            dim=spec.get("dim", 2),
            std=spec.get("std", 1.0),
            seed=spec.get("seed", 7),
        )
    if kind == "csv":
        return load_csv(spec["path"], spec["label_column"])
    if kind == "idx":
        return load_idx(spec["images"], spec["labels"])
    raise ValueError(f"unknown dataset kind {kind!r} (expected blobs, csv, or idx)")


def _resolve_out_dir(arg_out, cfg_out) -> str:
    return arg_out or cfg_out or os.environ.get("LABO_OUT") or "labo-out"


def _fail(message: str, code: int) -> int:
    print(f"error: {message}", file=sys.stderr)
    return code


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_verify(args) -> int:
    results = run_verification(quick=args.quick, seed=args.seed)
    width = max(len(r.name) for r in results)
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        print(f"{r.name:<{width}}  {status}  {r.seconds:6.2f}s  {r.detail}")
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    return 0 if not failed else 1


def _load_config(path: str) -> ExperimentConfig:
    try:
        return ExperimentConfig.load(path)
    except FileNotFoundError:
        raise ValueError(f"config file not found: {path}") from None
    except json.JSONDecodeError as e:
        raise ValueError(f"config parse error in {path}: line {e.lineno} column {e.colno}: {e.msg}") from None
    except TypeError as e:
        raise ValueError(f"bad config {path}: {e}") from None


def _run_cfg(cfg: ExperimentConfig, mode: str, seed: int) -> TrainConfig:
    # warm-up belongs to the two-stage method; baselines use their own
    # labels from step 0
    warmup = cfg.train.warmup if mode == "labo" else 0
    return replace(cfg.train, mode=mode, seed=seed, warmup=warmup)


def cmd_train(args) -> int:
    try:
        cfg = _load_config(args.config)
    except ValueError as e:
        return _fail(str(e), 2)
    out_dir = _resolve_out_dir(args.out, cfg.out_dir)
    os.makedirs(out_dir, exist_ok=True)

    data = build_dataset(cfg.dataset)
    teacher = None
    if "kd" in cfg.modes:
        path = cfg.teacher_checkpoint
        if not path:
            return _fail("kd mode requires teacher_checkpoint in the config", 2)
        if not os.path.exists(path):
            return _fail(f"teacher checkpoint not found: {path}", 2)
        teacher = load_checkpoint(path)

    summary: dict = {}
    any_failure = False
    for mode in cfg.modes:
        accs, confs, failures = [], [], []
        for seed in cfg.seeds:
            run_name = f"{mode}_seed{seed}"
            try:
                run_cfg = _run_cfg(cfg, mode, seed)
                model = MlpModel([data.dim, *cfg.hidden, data.num_classes], seed=seed)
                best, reports = run_training(model, data, run_cfg, teacher=teacher)
                write_reports_csv(reports, os.path.join(out_dir, f"{run_name}.csv"))
                save_checkpoint(best, os.path.join(out_dir, f"{run_name}.checkpoint.json"))
                ev = evaluate(best, data, split="test")
                accs.append(ev.accuracy)
                confs.append(ev.mean_confidence)
                print(f"{run_name}: test_acc={ev.accuracy:.4f} mean_conf={ev.mean_confidence:.4f}")
            except Exception as e:  # noqa: BLE001 - keep remaining runs alive
                any_failure = True
                failures.append({"seed": seed, "error": f"{type(e).__name__}: {e}"})
                print(f"{run_name}: FAILED ({e})", file=sys.stderr)
        summary[mode] = {
            "test_acc": accs,
            "mean_acc": float(np.mean(accs)) if accs else None,
            "std_acc": float(np.std(accs)) if accs else None,
            "mean_confidence": float(np.mean(confs)) if confs else None,
            "failures": failures,
        }

    write_json(os.path.join(out_dir, "summary.json"), summary)
    lines = [f"{'mode':<8} test accuracy (mean +/- std over {len(cfg.seeds)} seeds)"]
    for mode, row in summary.items():
        if row["mean_acc"] is None:
            lines.append(f"{mode:<8} all runs failed")
        else:
            lines.append(f"{mode:<8} {100 * row['mean_acc']:.2f} +/- {100 * row['std_acc']:.2f}")
    table = "\n".join(lines)
    atomic_write_text(os.path.join(out_dir, "summary.txt"), table + "\n")
    print(table)
    return 1 if any_failure else 0


def cmd_teacher(args) -> int:
    try:
        cfg = _load_config(args.config)
    except ValueError as e:
        return _fail(str(e), 2)
    out_dir = _resolve_out_dir(args.out, cfg.out_dir)
    data = build_dataset(cfg.dataset)
    seed = args.seed if args.seed is not None else cfg.seeds[0]
    path = os.path.join(out_dir, "teacher.checkpoint.json")
    teacher_cfg = replace(cfg.train, seed=seed)
    best, _ = train_teacher(data, teacher_cfg, checkpoint_path=path)
    ev = evaluate(best, data, split="test")
    print(f"teacher saved to {path} (test_acc={ev.accuracy:.4f})")
    return 0


def cmd_smooth(args) -> int:
    try:
        z = np.array([float(v) for v in args.logits.split(",")], dtype=np.float64)
        if z.size < 2:
            raise ValueError("need at least two logits")
    except ValueError as e:
        return _fail(f"bad --logits value {args.logits!r}: {e}", 2)
    if not 0 <= args.k < z.size:
        return _fail(f"--k {args.k} out of range for {z.size} logits", 2)
    try:
        p = numerics.softmax(z)
        p_star = labo_from_logits(z, args.tau)
        alpha_ad = adaptive_alpha(p, args.rho)
        alpha_used = args.alpha if args.alpha is not None else alpha_ad
        label = mix_label(args.k, p_star, alpha_used)
        breakdown = unified_objective(args.k, z, p_star, alpha_used, alpha_used * args.tau)
    except ValueError as e:
        return _fail(str(e), 2)
    doc = {
        "logits": z.tolist(),
        "target": args.k,
        "tau": args.tau,
        "model_dist": p.tolist(),
        "optimal_smoothing": p_star.tolist(),
        "adaptive_alpha": {"rho": args.rho, "value": alpha_ad},
        "alpha_used": alpha_used,
        "label": label.dist.tolist(),
        "objective": {
            "ce_term": breakdown.ce_term,
            "kl_term": breakdown.kl_term,
            "total": breakdown.total,
        },
    }
    print(json.dumps(doc, indent=1))
    return 0


def cmd_hist(args) -> int:
    try:
        cfg = _load_config(args.config)
    except ValueError as e:
        return _fail(str(e), 2)
    try:
        model = load_checkpoint(args.checkpoint)
    except (OSError, ValueError) as e:
        return _fail(f"cannot load checkpoint {args.checkpoint}: {e}", 2)
    data = build_dataset(cfg.dataset)
    if model.input_dim != data.dim or model.num_classes != data.num_classes:
        return _fail(
            f"checkpoint expects {model.input_dim} features / {model.num_classes} classes, "
            f"dataset has {data.dim} / {data.num_classes}",
            2,
        )
    ev = evaluate(model, data, split=args.split)
    out_dir = _resolve_out_dir(args.out, cfg.out_dir)
    hist_doc = {
        "split": args.split,
        "accuracy": ev.accuracy,
        "mean_confidence": ev.mean_confidence,
        "mean_entropy": ev.mean_entropy,
        "histogram": ev.histogram.to_dict(),
    }
    write_json(os.path.join(out_dir, "hist.json"), hist_doc)
    edges = ev.histogram.edges
    centers = (edges[:-1] + edges[1:]) / 2.0
    lines = [f"{float(c)!r} {int(n)}" for c, n in zip(centers, ev.histogram.counts)]
    atomic_write_text(os.path.join(out_dir, "hist.dat"), "\n".join(lines) + "\n")
    print(
        f"wrote {os.path.join(out_dir, 'hist.json')} and hist.dat "
        f"(acc={ev.accuracy:.4f}, mean_conf={ev.mean_confidence:.4f})"
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="labo", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", help="run the numeric verification suite")
    p.add_argument("--quick", action="store_true", help="smaller sweeps (about 10x faster)")
    p.add_argument("--seed", type=int, default=VERIFY_SEED)
    p.set_defaults(fn=cmd_verify)

    p = sub.add_parser("train", help="run a mode x seed comparison from a config")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default=None, help="output directory (default: config out_dir, $LABO_OUT, labo-out)")
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("teacher", help="train and save a teacher checkpoint")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default=None)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(fn=cmd_teacher)

    p = sub.add_parser("smooth", help="inspect smoothing for one logit vector")
    p.add_argument("--logits", required=True, help="comma separated, e.g. 2,1,0")
    p.add_argument("--k", type=int, default=0, help="ground-truth class index")
    p.add_argument("--tau", type=float, default=1.25)
    p.add_argument("--alpha", type=float, default=None, help="fixed mixing weight (default: adaptive)")
    p.add_argument("--rho", type=float, default=0.5)
    p.set_defaults(fn=cmd_smooth)

    p = sub.add_parser("hist", help="confidence histogram of a checkpoint on a dataset")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--config", required=True, help="config providing the dataset")
    p.add_argument("--split", default="test", choices=["train", "val", "test"])
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_hist)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 2 if e.code not in (0, None) else 0
    return args.fn(args)


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
