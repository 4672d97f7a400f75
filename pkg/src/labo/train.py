"""Two-stage training loop plus baseline regularizers and diagnostics.

Each step: sample a mini-batch, run the forward pass, build training labels
(during warm-up: uniform label smoothing; afterwards: whatever the
configured mode prescribes), take the mean logit gradient with the labels
held fixed, backpropagate, and apply SGD. Labels are rebuilt from the
current forward pass every step; nothing about them persists.

The diagnostics mirror the usual overconfidence analysis: besides accuracy
we track the mean probability assigned to the predicted class and its
histogram over the evaluation split.
"""

from __future__ import annotations

from dataclasses import dataclass, asdict, field, replace

import numpy as np

from . import numerics
from .data import Dataset
from .io import atomic_write_text
from .model import MlpModel, SgdOptimizer, save_checkpoint
from .smoothing import SmoothingConfig, build_label_batch

__all__ = [
    "TRAIN_MODES",
    "WARMUP_ALPHA",
    "TrainConfig",
    "EpochReport",
    "ConfidenceHistogram",
    "EvalResult",
    "evaluate",
    "run_training",
    "train_teacher",
    "write_reports_csv",
]

TRAIN_MODES = ("none", "ls", "cp", "kd", "labo")

# Mixing weight for uniform label smoothing during warm-up steps.
WARMUP_ALPHA = 0.1

# TrainConfig.mode -> label-construction mode
_LABEL_MODE = {"none": "none", "ls": "uniform_ls", "kd": "kd_teacher", "labo": "labo"}


@dataclass(frozen=True)
class TrainConfig:
    steps: int = 2000
    warmup: int = 0
    batch_size: int = 128
    lr: float = 0.1
    seed: int = 0
    mode: str = "labo"
    smoothing: SmoothingConfig = field(default_factory=SmoothingConfig)
    eval_every: int = 200
    momentum: float = 0.9
    weight_decay: float = 5e-4
    beta_cp: float = 0.1

    def __post_init__(self):
        if self.mode not in TRAIN_MODES:
            raise ValueError(f"mode must be one of {TRAIN_MODES}, got {self.mode!r}")
        if self.steps < 1:
            raise ValueError("steps must be >= 1")
        if not 0 <= self.warmup <= self.steps:
            raise ValueError(f"warmup must be in [0, steps], got {self.warmup}")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.eval_every < 1:
            raise ValueError("eval_every must be >= 1")
        if self.beta_cp < 0:
            raise ValueError("beta_cp must be >= 0")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["smoothing"] = self.smoothing.to_dict()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        d = dict(d)
        if "smoothing" in d and isinstance(d["smoothing"], dict):
            d["smoothing"] = SmoothingConfig.from_dict(d["smoothing"])
        return cls(**d)


@dataclass(frozen=True)
class EpochReport:
    """Metrics emitted every `eval_every` steps.

    `train_loss` averages the per-batch objective over the reporting
    window; `mean_alpha` is the mean mixing weight applied in the batch at
    the reporting step itself, so it always reflects the currently active
    labeling rule.
    """

    step: int
    train_loss: float
    val_acc: float
    mean_confidence: float
    mean_entropy: float
    mean_alpha: float


@dataclass(frozen=True)
class ConfidenceHistogram:
    """Histogram of predicted-class probabilities over 20 uniform bins."""

    edges: np.ndarray  # (21,)
    counts: np.ndarray  # (20,) ints summing to the eval-set size

    @classmethod
    def from_confidences(cls, confidences: np.ndarray) -> "ConfidenceHistogram":
        edges = np.linspace(0.0, 1.0, 21)
        counts, _ = np.histogram(confidences, bins=edges)
        return cls(edges=edges, counts=counts)

    def to_dict(self) -> dict:
        return {"edges": self.edges.tolist(), "counts": self.counts.tolist()}


@dataclass(frozen=True)
class EvalResult:
    accuracy: float
    mean_confidence: float
    mean_entropy: float
    histogram: ConfidenceHistogram


def evaluate(model: MlpModel, data: Dataset, split: str = "val") -> EvalResult:
    """Deterministic accuracy/confidence/entropy metrics over a split."""
    X, y = data.split_arrays(split)
    if X.shape[0] == 0:
        raise ValueError(f"split {split!r} is empty")
    P = numerics.softmax_rows(model.forward(X))
    predictions = P.argmax(axis=1)
    confidences = P.max(axis=1)
    return EvalResult(
        accuracy=float((predictions == y).mean()),
        mean_confidence=float(confidences.mean()),
        mean_entropy=float(numerics.entropy_rows(P).mean()),
        histogram=ConfidenceHistogram.from_confidences(confidences),
    )


def _batch_losses_and_grad(cfg, ks, Z, label_cfg, teacher_P):
    """Per-row objective values, mean logit gradient, and applied alphas."""
    n, num_classes = Z.shape
    rows = np.arange(n)
    P = numerics.softmax_rows(Z)

    if cfg.mode == "cp" and label_cfg is None:
        logp = numerics.log_softmax_rows(Z)
        H = numerics.entropy_rows(P)
        losses = -logp[rows, ks] - cfg.beta_cp * H
        grad = P.copy()
        grad[rows, ks] -= 1.0
        grad += cfg.beta_cp * P * (logp + H[:, None])
        return losses, grad / n, np.zeros(n)

    labels, alphas = build_label_batch(ks, Z, label_cfg, teacher_P)
    logp = numerics.log_softmax_rows(Z)
    losses = -(labels * logp).sum(axis=1)
    if label_cfg.mode == "labo":
        # KL(p_ls || U) = log K - H(p_ls), weighted by beta = alpha * tau
        P_ls = numerics.softmax_rows(Z / label_cfg.tau)
        losses = losses + alphas * label_cfg.tau * (np.log(num_classes) - numerics.entropy_rows(P_ls))
    elif label_cfg.mode == "kd_teacher":
        # report the true distillation loss, which differs from the
        # smoothed CE by the constant alpha * (KL(teacher||U) - log K)
        losses = losses - alphas * numerics.entropy_rows(teacher_P)
    grad = (P - labels) / n
    return losses, grad, alphas


def run_training(model, data, cfg: TrainConfig, teacher=None, step_callback=None):
    """Train `model` in place and return (best model, reports).

    Steps t < cfg.warmup use uniform label smoothing (alpha 0.1); from
    t >= cfg.warmup the configured mode takes over. Batches are drawn by
    shuffling the training indices once per epoch (full batches only, so a
    short final remainder rolls into the next epoch's shuffle). The model
    returned is the checkpoint with the best validation accuracy.

    `step_callback(steps_done, model)` runs after every parameter update.
    """
    if cfg.mode == "kd" and teacher is None:
        raise ValueError("kd mode requires a teacher model")
    rng = np.random.default_rng(cfg.seed)
    optimizer = SgdOptimizer(model, lr=cfg.lr, momentum=cfg.momentum, weight_decay=cfg.weight_decay)

    warmup_cfg = SmoothingConfig(mode="uniform_ls", alpha=WARMUP_ALPHA)
    if cfg.mode == "cp":
        main_cfg = None
    else:
        main_cfg = replace(cfg.smoothing, mode=_LABEL_MODE[cfg.mode])

    train_idx = data.splits["train"]
    if train_idx.size < cfg.batch_size:
        raise ValueError(f"batch size {cfg.batch_size} exceeds training set size {train_idx.size}")
    order = rng.permutation(train_idx)
    pos = 0

    reports: list[EpochReport] = []
    window_losses: list[float] = []
    best_acc = -1.0
    best_params = None

    for t in range(cfg.steps):
        if pos + cfg.batch_size > order.size:
            order = rng.permutation(train_idx)
            pos = 0
        batch = order[pos : pos + cfg.batch_size]
        pos += cfg.batch_size

        X = data.features[batch]
        ks = data.labels[batch]
        Z = model.forward(X)

        warm = t < cfg.warmup
        label_cfg = warmup_cfg if warm else main_cfg
        teacher_P = None
        if not warm and cfg.mode == "kd":
            teacher_P = numerics.softmax_rows(teacher.forward(X))
        losses, grad, alphas = _batch_losses_and_grad(cfg, ks, Z, label_cfg, teacher_P)

        batch_loss = float(losses.mean())
        if not np.isfinite(batch_loss):
            raise FloatingPointError(f"non-finite training loss at step {t}")
        window_losses.append(batch_loss)

        grads = model.backward(grad)
        optimizer.step(model, grads)
        if not all(np.all(np.isfinite(W)) for W in model.weights):
            raise FloatingPointError(f"non-finite parameters after step {t}")

        if step_callback is not None:
            step_callback(t + 1, model)

        if (t + 1) % cfg.eval_every == 0 or t + 1 == cfg.steps:
            ev = evaluate(model, data, split="val")
            reports.append(
                EpochReport(
                    step=t + 1,
                    train_loss=float(np.mean(window_losses)),
                    val_acc=ev.accuracy,
                    mean_confidence=ev.mean_confidence,
                    mean_entropy=ev.mean_entropy,
                    mean_alpha=float(alphas.mean()),
                )
            )
            window_losses = []
            if ev.accuracy > best_acc:
                best_acc = ev.accuracy
                best_params = model.params_flat()

    best_model = model.copy()
    if best_params is not None:
        best_model.set_params_flat(best_params)
    return best_model, reports


def train_teacher(data: Dataset, cfg: TrainConfig, hidden: int = 64, checkpoint_path=None):
    """Train a wider MLP with uniform label smoothing for use as a teacher."""
    teacher_cfg = replace(cfg, mode="ls", warmup=0)
    model = MlpModel([data.dim, hidden, data.num_classes], seed=cfg.seed)
    best, reports = run_training(model, data, teacher_cfg)
    if checkpoint_path is not None:
        save_checkpoint(best, checkpoint_path)
    return best, reports


def write_reports_csv(reports, path: str) -> None:
    lines = ["step,train_loss,val_acc,mean_confidence,mean_entropy,mean_alpha"]
    for r in reports:
        lines.append(
            f"{r.step},{r.train_loss!r},{r.val_acc!r},{r.mean_confidence!r},"
            f"{r.mean_entropy!r},{r.mean_alpha!r}"
        )
    atomic_write_text(path, "\n".join(lines) + "\n")
