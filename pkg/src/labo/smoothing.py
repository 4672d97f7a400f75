"""Construction of smoothing distributions and smoothed training labels.

A smoothed label mixes the one-hot target with a smoothing distribution:

    label(k)    = 1 - alpha + alpha * p_ls(k)
    label(j!=k) = alpha * p_ls(j)

Supported smoothing distributions: uniform (classical label smoothing), a
teacher model's output (distillation-style), and the closed-form optimum of
the bi-level label-regularization objective, which is the model's own
tempered output p^(1/tau) / sum(p^(1/tau)).
"""

from __future__ import annotations

from dataclasses import dataclass, asdict, replace

import numpy as np

from . import numerics
from .numerics import check_logits, check_prob_vec, onehot, uniform

__all__ = [
    "MODES",
    "ALPHA_RULES",
    "SmoothingConfig",
    "SmoothedLabel",
    "uniform_smooth",
    "mix_label",
    "labo_optimal_smoothing",
    "labo_from_logits",
    "adaptive_alpha",
    "build_label",
    "build_label_batch",
]

MODES = ("none", "uniform_ls", "kd_teacher", "labo")
ALPHA_RULES = ("fixed", "adaptive")


@dataclass(frozen=True)
class SmoothingConfig:
    """Immutable smoothing hyperparameters.

    The KL weight beta is never stored; it is always derived as
    beta = alpha * tau, so tau is the single knob controlling the flatness
    of the optimal smoothing distribution. With the adaptive alpha rule the
    exponent alpha/beta = 1/tau stays constant and adaptivity only moves
    the mixing weight (and thereby the KL weight).
    """

    mode: str = "labo"
    alpha_rule: str = "fixed"
    alpha: float = 0.1
    rho: float = 0.5
    tau: float = 1.25

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.alpha_rule not in ALPHA_RULES:
            raise ValueError(f"alpha_rule must be one of {ALPHA_RULES}, got {self.alpha_rule!r}")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must be in [0, 1], got {self.alpha}")
        if not 0.5 <= self.rho <= 1.0:
            raise ValueError(f"rho must be in [0.5, 1], got {self.rho}")
        if not self.tau > 0:
            raise ValueError(f"tau must be positive, got {self.tau}")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "SmoothingConfig":
        return cls(**d)

    def with_mode(self, mode: str) -> "SmoothingConfig":
        return replace(self, mode=mode)


@dataclass(frozen=True)
class SmoothedLabel:
    """A smoothed training target: the mixed distribution plus its class."""

    target: int
    alpha_used: float
    dist: np.ndarray

    def __post_init__(self):
        dist = check_prob_vec(self.dist)
        object.__setattr__(self, "dist", dist)
        if not 0 <= self.target < dist.shape[0]:
            raise ValueError(f"target {self.target} out of range for K={dist.shape[0]}")


def uniform_smooth(k: int, num_classes: int, alpha: float) -> SmoothedLabel:
    """Classical label smoothing: mass alpha spread uniformly over classes."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must be in [0, 1], got {alpha}")
    if not 0 <= k < num_classes:
        raise ValueError(f"class index {k} out of range [0, {num_classes})")
    dist = np.full(num_classes, alpha / num_classes)
    dist[k] = 1.0 - alpha + alpha / num_classes
    return SmoothedLabel(target=k, alpha_used=alpha, dist=dist)


def mix_label(k: int, p_ls, alpha: float) -> SmoothedLabel:
    """General smoothed label: (1 - alpha) * onehot(k) + alpha * p_ls."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must be in [0, 1], got {alpha}")
    p_ls = check_prob_vec(p_ls)
    if not 0 <= k < p_ls.shape[0]:
        raise ValueError(f"class index {k} out of range [0, {p_ls.shape[0]})")
    dist = alpha * p_ls
    dist[k] += 1.0 - alpha
    return SmoothedLabel(target=k, alpha_used=alpha, dist=dist)


def labo_optimal_smoothing(p, tau: float) -> np.ndarray:
    """Optimal smoothing distribution: p_j^(1/tau), renormalized.

    Computed in the log domain as softmax(log(p) / tau) so that small
    probabilities survive large exponents. Requires strictly positive p
    (softmax outputs always are).
    """
    if not tau > 0:
        raise ValueError(f"tau must be positive, got {tau}")
    p = check_prob_vec(p)
    if np.any(p == 0):
        raise ValueError("optimal smoothing requires strictly positive p")
    logp = np.log(p) / tau
    shifted = logp - logp.max()
    e = np.exp(shifted)
    return e / e.sum()


def labo_from_logits(z, tau: float) -> np.ndarray:
    """Optimal smoothing straight from logits: identical to tempering.

    softmax(z / tau) equals labo_optimal_smoothing(softmax(z), tau) because
    the power transform commutes with the softmax normalization.
    """
    return numerics.tempered_softmax(z, tau)


def adaptive_alpha(p, rho: float) -> float:
    """Instance-specific mixing weight (log K - rho * H(p)) / log K.

    Confident predictions (low entropy) receive more smoothing; the result
    always lies in [1 - rho, 1].
    """
    if not 0.5 <= rho <= 1.0:
        raise ValueError(f"rho must be in [0.5, 1], got {rho}")
    p = check_prob_vec(p)
    h_u = np.log(p.shape[0])
    return float((h_u - rho * numerics.entropy(p)) / h_u)


def build_label(k: int, z, cfg: SmoothingConfig, teacher_p=None) -> SmoothedLabel:
    """Construct the training label for one instance under `cfg`.

    The returned label is a plain constant: it holds freshly allocated
    arrays and is never differentiated through, matching the two-stage
    scheme where the smoothing distribution is recomputed from the current
    forward pass and then held fixed for the parameter update.
    """
    z = check_logits(z)
    num_classes = z.shape[0]
    if cfg.mode == "none":
        return SmoothedLabel(target=k, alpha_used=0.0, dist=onehot(k, num_classes))
    if cfg.mode == "uniform_ls":
        return uniform_smooth(k, num_classes, cfg.alpha)
    if cfg.mode == "kd_teacher":
        if teacher_p is None:
            raise ValueError("kd_teacher mode requires teacher_p")
        return mix_label(k, teacher_p, cfg.alpha)
    # labo: alpha from the rule applied to the current model distribution,
    # smoothing distribution from the tempered logits.
    p = numerics.softmax(z)
    if cfg.alpha_rule == "adaptive":
        alpha = adaptive_alpha(p, cfg.rho)
    else:
        alpha = cfg.alpha
    p_ls = labo_from_logits(z, cfg.tau)
    return mix_label(k, p_ls, alpha)


def build_label_batch(ks, Z, cfg: SmoothingConfig, teacher_P=None):
    """Vectorized `build_label` over a batch.

    Args:
        ks: int array (n,) of target classes.
        Z: float array (n, K) of logits.
        teacher_P: optional (n, K) teacher distributions for kd_teacher.

    Returns:
        (dist, alphas): the (n, K) label matrix and the (n,) mixing weights
        actually applied. Rows match per-instance `build_label` output.
    """
    Z = np.asarray(Z, dtype=np.float64)
    ks = np.asarray(ks)
    n, num_classes = Z.shape
    rows = np.arange(n)

    if cfg.mode == "none":
        dist = np.zeros((n, num_classes))
        dist[rows, ks] = 1.0
        return dist, np.zeros(n)
    if cfg.mode == "uniform_ls":
        dist = np.full((n, num_classes), cfg.alpha / num_classes)
        dist[rows, ks] = 1.0 - cfg.alpha + cfg.alpha / num_classes
        return dist, np.full(n, cfg.alpha)
    if cfg.mode == "kd_teacher":
        if teacher_P is None:
            raise ValueError("kd_teacher mode requires teacher_P")
        dist = cfg.alpha * teacher_P
        dist[rows, ks] += 1.0 - cfg.alpha
        return dist, np.full(n, cfg.alpha)

    P = numerics.softmax_rows(Z)
    if cfg.alpha_rule == "adaptive":
        h_u = np.log(num_classes)
        alphas = (h_u - cfg.rho * numerics.entropy_rows(P)) / h_u
    else:
        alphas = np.full(n, cfg.alpha)
    P_ls = numerics.softmax_rows(Z / cfg.tau)
    dist = alphas[:, None] * P_ls
    dist[rows, ks] += 1.0 - alphas
    return dist, alphas
