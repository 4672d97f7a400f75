"""Per-instance training losses and their gradients with respect to logits.

The unified objective is a smoothed cross entropy plus a KL penalty that
keeps the smoothing distribution close to uniform:

    R = -sum_j label(j) * log p(j)  +  beta * KL(p_ls || U)

Classical label smoothing is the p_ls = U special case (the KL vanishes),
and distillation with temperature 1 is the p_ls = teacher special case up
to an additive constant (see `kd_decomposition_residual`).

All losses are per-instance; batch reduction is the arithmetic mean, which
keeps gradient scale independent of batch size.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import numerics
from .numerics import check_logits, check_prob_vec, onehot, uniform
from .smoothing import SmoothedLabel, mix_label

__all__ = [
    "ObjectiveBreakdown",
    "smoothed_ce",
    "unified_objective",
    "cp_loss",
    "cp_grad_wrt_logits",
    "kd_loss",
    "kd_decomposition_residual",
    "grad_wrt_logits",
]


@dataclass(frozen=True)
class ObjectiveBreakdown:
    """Cross-entropy term, KL term, and their sum, all in nats."""

    ce_term: float
    kl_term: float
    total: float

    @classmethod
    def of(cls, ce_term: float, kl_term: float) -> "ObjectiveBreakdown":
        return cls(ce_term=ce_term, kl_term=kl_term, total=ce_term + kl_term)


def smoothed_ce(label: SmoothedLabel, z) -> float:
    """Cross entropy of the model against a smoothed label."""
    z = check_logits(z)
    if label.dist.shape != z.shape:
        raise ValueError(f"shape mismatch: label {label.dist.shape} vs logits {z.shape}")
    return float(-(label.dist * numerics.log_softmax(z)).sum())


def unified_objective(k: int, z, p_ls, alpha: float, beta: float) -> ObjectiveBreakdown:
    """Smoothed CE with p_ls mixed in, plus beta * KL(p_ls || uniform)."""
    if beta < 0:
        raise ValueError(f"beta must be >= 0, got {beta}")
    z = check_logits(z)
    p_ls = check_prob_vec(p_ls)
    ce = smoothed_ce(mix_label(k, p_ls, alpha), z)
    kl = beta * numerics.kl_div(p_ls, uniform(p_ls.shape[0]))
    return ObjectiveBreakdown.of(ce, kl)


def cp_loss(k: int, z, beta_cp: float) -> float:
    """Cross entropy plus a penalty on confident (low-entropy) outputs."""
    if beta_cp < 0:
        raise ValueError(f"beta_cp must be >= 0, got {beta_cp}")
    z = check_logits(z)
    p = numerics.softmax(z)
    return float(-numerics.log_softmax(z)[k] - beta_cp * numerics.entropy(p))


def cp_grad_wrt_logits(k: int, z, beta_cp: float) -> np.ndarray:
    """Analytic gradient of `cp_loss` with respect to the logits.

    d/dz_i [-log p_k] = p_i - 1{i=k}, and
    d/dz_i [-H(p)]    = p_i * (log p_i + H(p)),
    so the total is p - onehot(k) + beta_cp * p * (log p + H(p)).
    """
    z = check_logits(z)
    p = numerics.softmax(z)
    h = numerics.entropy(p)
    return p - onehot(k, z.shape[0]) + beta_cp * p * (np.log(p) + h)


def kd_loss(k: int, z, teacher_p, alpha: float) -> float:
    """Distillation loss at temperature 1.

    (1 - alpha) * CE(onehot(k), p) + alpha * KL(teacher || p).
    """
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must be in [0, 1], got {alpha}")
    z = check_logits(z)
    teacher_p = check_prob_vec(teacher_p)
    logp = numerics.log_softmax(z)
    ce = -logp[k]
    kl = numerics.kl_div(teacher_p, numerics.softmax(z))
    return float((1.0 - alpha) * ce + alpha * kl)


def kd_decomposition_residual(k: int, z, teacher_p, alpha: float) -> float:
    """Gap between the distillation loss and its smoothed-label rewriting.

    KD at temperature 1 equals smoothed CE with the teacher mixed in, plus
    alpha * KL(teacher || U), minus the constant alpha * log K. Returns the
    absolute difference between the two evaluations (identically zero up to
    rounding).
    """
    z = check_logits(z)
    teacher_p = check_prob_vec(teacher_p)
    num_classes = z.shape[0]
    lhs = kd_loss(k, z, teacher_p, alpha)
    rhs = (
        smoothed_ce(mix_label(k, teacher_p, alpha), z)
        + alpha * numerics.kl_div(teacher_p, uniform(num_classes))
        - alpha * np.log(num_classes)
    )
    return float(abs(lhs - rhs))


def grad_wrt_logits(label: SmoothedLabel, z) -> np.ndarray:
    """Training gradient of the smoothed CE with the label held fixed.

    Returns softmax(z) - label.dist. This is also the full gradient of the
    unified objective when the smoothing distribution is the closed-form
    optimum: the KL term is constant once the label is detached, and the
    gradient through the inner solution vanishes because that solution is
    optimal on the simplex.
    """
    z = check_logits(z)
    if label.dist.shape != z.shape:
        raise ValueError(f"shape mismatch: label {label.dist.shape} vs logits {z.shape}")
    return numerics.softmax(z) - label.dist
