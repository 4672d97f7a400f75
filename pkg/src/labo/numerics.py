"""Numerically stable probability kernels shared by every other module.

All kernels compute in the log domain and exponentiate last, so that the
large exponents produced by tempered transforms cannot underflow raw
probabilities. Everything is float64; the tolerances quoted in the test
suite assume double precision.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "check_logits",
    "check_prob_vec",
    "uniform",
    "onehot",
    "softmax",
    "log_softmax",
    "tempered_softmax",
    "entropy",
    "kl_div",
    "softmax_rows",
    "log_softmax_rows",
    "entropy_rows",
]

# |sum(p) - 1| allowed for a probability vector
PROB_SUM_TOL = 1e-9


def check_logits(z) -> np.ndarray:
    """Validate a logit vector: 1-D, K >= 2, all entries finite."""
    z = np.asarray(z, dtype=np.float64)
    if z.ndim != 1 or z.shape[0] < 2:
        raise ValueError(f"logits must be a 1-D vector with K >= 2, got shape {z.shape}")
    if not np.all(np.isfinite(z)):
        raise ValueError("logits must be finite")
    return z


def check_prob_vec(p) -> np.ndarray:
    """Validate a point on the probability simplex (entries >= 0, sum == 1)."""
    p = np.asarray(p, dtype=np.float64)
    if p.ndim != 1 or p.shape[0] < 2:
        raise ValueError(f"probability vector must be 1-D with K >= 2, got shape {p.shape}")
    if not np.all(np.isfinite(p)):
        raise ValueError("probability vector must be finite")
    if np.any(p < 0):
        raise ValueError(f"probability vector has negative entries (min {p.min()})")
    s = p.sum()
    if abs(s - 1.0) > PROB_SUM_TOL:
        raise ValueError(f"probability vector sums to {s!r}, expected 1 within {PROB_SUM_TOL}")
    return p


def uniform(num_classes: int) -> np.ndarray:
    """Uniform distribution over `num_classes` classes."""
    if num_classes < 2:
        raise ValueError("need at least 2 classes")
    return np.full(num_classes, 1.0 / num_classes)


def onehot(k: int, num_classes: int) -> np.ndarray:
    """One-hot vector with unit mass on class `k`."""
    if num_classes < 2:
        raise ValueError("need at least 2 classes")
    if not 0 <= k < num_classes:
        raise ValueError(f"class index {k} out of range [0, {num_classes})")
    e = np.zeros(num_classes)
    e[k] = 1.0
    return e


def softmax(z) -> np.ndarray:
    """Softmax with max-shift stabilization: exp(z - max) / sum."""
    z = check_logits(z)
    e = np.exp(z - z.max())
    return e / e.sum()


def log_softmax(z) -> np.ndarray:
    """Log-domain softmax: z - max - log(sum(exp(z - max)))."""
    z = check_logits(z)
    shifted = z - z.max()
    return shifted - np.log(np.exp(shifted).sum())


def tempered_softmax(z, tau: float) -> np.ndarray:
    """softmax(z / tau); tau > 0. Larger tau flattens toward uniform."""
    if not tau > 0:
        raise ValueError(f"temperature must be positive, got {tau}")
    z = check_logits(z)
    return softmax(z / tau)


def entropy(p) -> float:
    """Shannon entropy in nats, with 0*log(0) := 0. Result in [0, log K]."""
    p = check_prob_vec(p)
    nz = p[p > 0]
    return float(-(nz * np.log(nz)).sum())


def kl_div(p, q) -> float:
    """KL(p || q) in nats.

    Terms with p_j = 0 contribute zero. Raises ValueError when p puts mass
    where q has none (callers must handle degenerate supports explicitly
    rather than receiving an infinity).
    """
    p = check_prob_vec(p)
    q = check_prob_vec(q)
    if p.shape != q.shape:
        raise ValueError(f"shape mismatch: {p.shape} vs {q.shape}")
    mask = p > 0
    if np.any(q[mask] == 0):
        raise ValueError("support violation: p has mass where q is zero")
    return float((p[mask] * (np.log(p[mask]) - np.log(q[mask]))).sum())


# ---------------------------------------------------------------------------
# Row-wise variants over (n, K) batches; same arithmetic as the 1-D kernels.
# ---------------------------------------------------------------------------


def softmax_rows(Z: np.ndarray) -> np.ndarray:
    e = np.exp(Z - Z.max(axis=1, keepdims=True))
    return e / e.sum(axis=1, keepdims=True)


def log_softmax_rows(Z: np.ndarray) -> np.ndarray:
    shifted = Z - Z.max(axis=1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


def entropy_rows(P: np.ndarray) -> np.ndarray:
    logp = np.where(P > 0, np.log(np.where(P > 0, P, 1.0)), 0.0)
    return -(P * logp).sum(axis=1)
