"""Minimal multilayer perceptron with manual forward/backward passes.

ReLU hidden layers, identity output (logits). Initialization is seeded
He-uniform fan-in scaling, so runs are reproducible bit for bit. No
dropout or normalization layers: the training comparisons in this package
are about label regularizers, and extra regularizers would confound them.
"""

from __future__ import annotations

import json

import numpy as np

from .io import atomic_write_text

__all__ = ["MlpModel", "SgdOptimizer", "save_checkpoint", "load_checkpoint"]


class MlpModel:
    """Fully connected ReLU network producing raw logits.

    Attributes:
        layer_sizes: [D_in, H_1, ..., K]
        weights: per-layer (fan_in, fan_out) matrices
        biases: per-layer (fan_out,) vectors
    """

    def __init__(self, layer_sizes, seed: int = 0, init: bool = True):
        layer_sizes = [int(s) for s in layer_sizes]
        if len(layer_sizes) < 2:
            raise ValueError("need at least an input and an output layer")
        if min(layer_sizes) < 1 or layer_sizes[-1] < 2:
            raise ValueError(f"bad layer sizes {layer_sizes}")
        self.layer_sizes = layer_sizes
        self.seed = seed
        self.weights: list[np.ndarray] = []
        self.biases: list[np.ndarray] = []
        rng = np.random.default_rng(seed)
        for fan_in, fan_out in zip(layer_sizes[:-1], layer_sizes[1:]):
            if init:
                bound = np.sqrt(6.0 / fan_in)
                W = rng.uniform(-bound, bound, size=(fan_in, fan_out))
            else:
                W = np.zeros((fan_in, fan_out))
            self.weights.append(W)
            self.biases.append(np.zeros(fan_out))
        self._cache = None

    @property
    def num_classes(self) -> int:
        return self.layer_sizes[-1]

    @property
    def input_dim(self) -> int:
        return self.layer_sizes[0]

    def forward(self, x: np.ndarray) -> np.ndarray:
        """Compute logits; accepts a single (D,) input or an (n, D) batch.

        Caches pre-activations and activations for the next `backward` call.
        """
        x = np.asarray(x, dtype=np.float64)
        single = x.ndim == 1
        X = x[None, :] if single else x
        if X.ndim != 2 or X.shape[1] != self.input_dim:
            raise ValueError(f"expected input dim {self.input_dim}, got shape {x.shape}")
        activations = [X]
        pre_acts = []
        a = X
        last = len(self.weights) - 1
        for li, (W, b) in enumerate(zip(self.weights, self.biases)):
            h = a @ W + b
            pre_acts.append(h)
            a = h if li == last else np.maximum(h, 0.0)
            activations.append(a)
        self._cache = (activations, pre_acts)
        logits = activations[-1]
        return logits[0] if single else logits

    def backward(self, grad_logits: np.ndarray):
        """Backpropagate a logit gradient from the most recent `forward`.

        `grad_logits` has the logits' shape ((K,) or (n, K)); the result is
        a list of (dW, db) pairs summed over the batch. Pass the gradient
        already divided by the batch size to get mean-reduction gradients.
        """
        if self._cache is None:
            raise RuntimeError("backward called before forward (no cached activations)")
        activations, pre_acts = self._cache
        g = np.asarray(grad_logits, dtype=np.float64)
        if g.ndim == 1:
            g = g[None, :]
        if g.shape != pre_acts[-1].shape:
            raise ValueError(f"grad_logits shape {grad_logits.shape} does not match cached logits")
        grads = [None] * len(self.weights)
        for li in range(len(self.weights) - 1, -1, -1):
            a_prev = activations[li]
            grads[li] = (a_prev.T @ g, g.sum(axis=0))
            if li > 0:
                g = (g @ self.weights[li].T) * (pre_acts[li - 1] > 0)
        return grads

    def copy(self) -> "MlpModel":
        clone = MlpModel(self.layer_sizes, seed=self.seed, init=False)
        clone.weights = [W.copy() for W in self.weights]
        clone.biases = [b.copy() for b in self.biases]
        return clone

    def params_flat(self) -> np.ndarray:
        """All parameters concatenated into one vector (copy)."""
        parts = []
        for W, b in zip(self.weights, self.biases):
            parts.append(W.ravel())
            parts.append(b)
        return np.concatenate(parts)

    def set_params_flat(self, vec: np.ndarray) -> None:
        offset = 0
        for li, (W, b) in enumerate(zip(self.weights, self.biases)):
            self.weights[li] = vec[offset : offset + W.size].reshape(W.shape).copy()
            offset += W.size
            self.biases[li] = vec[offset : offset + b.size].copy()
            offset += b.size
        if offset != vec.size:
            raise ValueError(f"parameter vector size {vec.size}, expected {offset}")


class SgdOptimizer:
    """SGD with classical momentum and L2 weight decay folded into the gradient.

    v <- momentum * v + grad + weight_decay * theta
    theta <- theta - lr * v
    """

    def __init__(self, model: MlpModel, lr: float, momentum: float = 0.9, weight_decay: float = 5e-4):
        if not lr > 0:
            raise ValueError(f"learning rate must be positive, got {lr}")
        if not 0.0 <= momentum < 1.0:
            raise ValueError(f"momentum must be in [0, 1), got {momentum}")
        if weight_decay < 0:
            raise ValueError(f"weight decay must be >= 0, got {weight_decay}")
        self.lr = lr
        self.momentum = momentum
        self.weight_decay = weight_decay
        self.vel = [
            (np.zeros_like(W), np.zeros_like(b)) for W, b in zip(model.weights, model.biases)
        ]

    def step(self, model: MlpModel, grads) -> None:
        for li, (gW, gb) in enumerate(grads):
            vW, vb = self.vel[li]
            vW *= self.momentum
            vW += gW + self.weight_decay * model.weights[li]
            vb *= self.momentum
            vb += gb + self.weight_decay * model.biases[li]
            model.weights[li] -= self.lr * vW
            model.biases[li] -= self.lr * vb


def save_checkpoint(model: MlpModel, path: str) -> None:
    """Write architecture, seed, and parameters as JSON (atomic, exact).

    Floats are serialized with repr-level precision, which round-trips
    every finite double exactly.
    """
    doc = {
        "format": "labo-mlp-checkpoint-v1",
        "layer_sizes": model.layer_sizes,
        "seed": model.seed,
        "layers": [
            {
                "weight_shape": list(W.shape),
                "weight": W.tolist(),
                "bias_shape": list(b.shape),
                "bias": b.tolist(),
            }
            for W, b in zip(model.weights, model.biases)
        ],
    }
    atomic_write_text(path, json.dumps(doc, indent=1))


def load_checkpoint(path: str) -> MlpModel:
    with open(path) as f:
        doc = json.load(f)
    if doc.get("format") != "labo-mlp-checkpoint-v1":
        raise ValueError(f"not a model checkpoint: {path}")
    model = MlpModel(doc["layer_sizes"], seed=doc["seed"], init=False)
    for li, layer in enumerate(doc["layers"]):
        W = np.array(layer["weight"], dtype=np.float64)
        b = np.array(layer["bias"], dtype=np.float64)
        if list(W.shape) != layer["weight_shape"] or list(b.shape) != layer["bias_shape"]:
            raise ValueError(f"checkpoint layer {li} shape mismatch in {path}")
        if W.shape != model.weights[li].shape or b.shape != model.biases[li].shape:
            raise ValueError(f"checkpoint layer {li} does not match architecture in {path}")
        model.weights[li] = W
        model.biases[li] = b
    return model
