"""Minimal dense feed-forward network: ReLU hidden layers, softmax output,
cross-entropy loss, plain SGD.

Everything runs in float64 on a single thread so that a (seed, data, config)
triple always reproduces the same parameters bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError

Array = np.ndarray


@dataclass
class DenseParams:
    """One affine layer. weights has shape (out_dim, in_dim), bias (out_dim,)."""

    weights: Array
    bias: Array

    @property
    def in_dim(self) -> int:
        return self.weights.shape[1]

    @property
    def out_dim(self) -> int:
        return self.weights.shape[0]


@dataclass
class NetworkParams:
    """Ordered dense layers; ReLU between them, softmax after the last."""

    layers: list[DenseParams]

    @property
    def in_dim(self) -> int:
        return self.layers[0].in_dim

    @property
    def num_classes(self) -> int:
        return self.layers[-1].out_dim


@dataclass(frozen=True)
class TrainConfig:
    """SGD hyperparameters for the output model.

    `mask_per_row` switches mask sampling from one mask per batch (default)
    to an independent mask per row. `k_weights`, when given, replaces the
    uniform prior over mask sizes 1..n with the supplied weights.
    `early_stop_patience` (off by default, for determinism of the epoch
    count) stops training once full-mask validation loss has not improved
    for that many epochs, keeping the best parameters seen.
    """

    learning_rate: float = 0.1
    batch_size: int = 32
    epochs: int = 200
    seed: int = 0
    hidden_dims: tuple[int, ...] = (100, 100)
    mask_per_row: bool = False
    k_weights: tuple[float, ...] | None = None
    early_stop_patience: int | None = None

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise InputError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.batch_size < 1:
            raise InputError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.epochs < 1:
            raise InputError(f"epochs must be >= 1, got {self.epochs}")
        if self.early_stop_patience is not None and self.early_stop_patience < 1:
            raise InputError(
                f"early_stop_patience must be >= 1, got {self.early_stop_patience}")
        object.__setattr__(self, "hidden_dims", tuple(int(h) for h in self.hidden_dims))
        if any(h < 1 for h in self.hidden_dims):
            raise InputError(f"hidden layer sizes must be >= 1, got {self.hidden_dims}")
        if not isinstance(self.mask_per_row, bool):
            raise InputError(f"mask_per_row must be a bool, got {self.mask_per_row!r}")
        if self.k_weights is not None:
            object.__setattr__(self, "k_weights", tuple(float(w) for w in self.k_weights))

    def to_obj(self) -> dict:
        return {
            "learning_rate": self.learning_rate,
            "batch_size": self.batch_size,
            "epochs": self.epochs,
            "seed": self.seed,
            "hidden_dims": list(self.hidden_dims),
            "mask_per_row": self.mask_per_row,
            "k_weights": list(self.k_weights) if self.k_weights is not None else None,
            "early_stop_patience": self.early_stop_patience,
        }

    @classmethod
    def from_obj(cls, obj: dict) -> "TrainConfig":
        kw = dict(obj)
        kw["hidden_dims"] = tuple(kw.get("hidden_dims", (100, 100)))
        if kw.get("k_weights") is not None:
            kw["k_weights"] = tuple(kw["k_weights"])
        return cls(**kw)


def init_params(in_dim: int, hidden_dims: tuple[int, ...], num_classes: int,
                rng: np.random.Generator) -> NetworkParams:
    """Glorot-uniform weights (bound sqrt(6/(fan_in+fan_out))), zero biases."""
    dims = [int(in_dim), *hidden_dims, int(num_classes)]
    layers = []
    for d_in, d_out in zip(dims[:-1], dims[1:]):
        bound = np.sqrt(6.0 / (d_in + d_out))
        layers.append(DenseParams(
            weights=rng.uniform(-bound, bound, size=(d_out, d_in)),
            bias=np.zeros(d_out),
        ))
    return NetworkParams(layers)


def _as_batch(params: NetworkParams, batch: Array) -> Array:
    x = np.asarray(batch, dtype=np.float64)
    if x.ndim != 2:
        raise InputError(f"batch must be 2-D, got shape {x.shape}")
    if x.shape[1] != params.in_dim:
        raise InputError(
            f"batch has {x.shape[1]} columns but the network expects {params.in_dim}")
    return x


def _softmax(logits: Array) -> Array:
    shifted = logits - logits.max(axis=1, keepdims=True)
    expd = np.exp(shifted)
    return expd / expd.sum(axis=1, keepdims=True)


def forward(params: NetworkParams, batch: Array) -> Array:
    """Class probabilities, one row per input row."""
    h = _as_batch(params, batch)
    for layer in params.layers[:-1]:
        h = np.maximum(h @ layer.weights.T + layer.bias, 0.0)
    last = params.layers[-1]
    return _softmax(h @ last.weights.T + last.bias)


def _check_labels(labels: Array, num_classes: int) -> Array:
    y = np.asarray(labels)
    if y.ndim != 1 or not np.issubdtype(y.dtype, np.integer):
        y = np.asarray(labels, dtype=np.int64)
    if y.size and (y.min() < 0 or y.max() >= num_classes):
        bad = y[(y < 0) | (y >= num_classes)][0]
        raise InputError(f"label {bad} outside [0, {num_classes})")
    return y.astype(np.int64)


def mean_loss(params: NetworkParams, batch: Array, labels: Array) -> float:
    """Mean cross-entropy over the batch, without gradients."""
    x = _as_batch(params, batch)
    y = _check_labels(labels, params.num_classes)
    if x.shape[0] != y.shape[0]:
        raise InputError(f"{x.shape[0]} rows but {y.shape[0]} labels")
    h = x
    for layer in params.layers[:-1]:
        h = np.maximum(h @ layer.weights.T + layer.bias, 0.0)
    last = params.layers[-1]
    logits = h @ last.weights.T + last.bias
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_probs = shifted - np.log(np.exp(shifted).sum(axis=1))[:, None]
    return float(-log_probs[np.arange(x.shape[0]), y].mean())


def loss_and_grad(params: NetworkParams, batch: Array,
                  labels: Array) -> tuple[float, NetworkParams]:
    """Mean cross-entropy over the batch and its gradient w.r.t. every layer."""
    x = _as_batch(params, batch)
    y = _check_labels(labels, params.num_classes)
    if x.shape[0] != y.shape[0]:
        raise InputError(f"{x.shape[0]} rows but {y.shape[0]} labels")
    n = x.shape[0]

    activations = [x]
    h = x
    for layer in params.layers[:-1]:
        h = np.maximum(h @ layer.weights.T + layer.bias, 0.0)
        activations.append(h)
    last = params.layers[-1]
    logits = h @ last.weights.T + last.bias

    shifted = logits - logits.max(axis=1, keepdims=True)
    log_z = np.log(np.exp(shifted).sum(axis=1))
    log_probs = shifted - log_z[:, None]
    loss = float(-log_probs[np.arange(n), y].mean())

    delta = np.exp(log_probs)
    delta[np.arange(n), y] -= 1.0
    delta /= n

    grads: list[DenseParams] = [None] * len(params.layers)  # type: ignore[list-item]
    for i in range(len(params.layers) - 1, -1, -1):
        layer = params.layers[i]
        a_in = activations[i]
        grads[i] = DenseParams(weights=delta.T @ a_in, bias=delta.sum(axis=0))
        if i > 0:
            # ReLU'(z) recovered from post-activation values: output > 0 iff z > 0
            delta = (delta @ layer.weights) * (activations[i] > 0)
    return loss, NetworkParams(grads)


def sgd_step(params: NetworkParams, grads: NetworkParams,
             learning_rate: float) -> NetworkParams:
    """params - learning_rate * grads, elementwise; inputs untouched."""
    if len(params.layers) != len(grads.layers):
        raise InputError("gradient layer count does not match params")
    new_layers = []
    for p, g in zip(params.layers, grads.layers):
        if p.weights.shape != g.weights.shape or p.bias.shape != g.bias.shape:
            raise InputError("gradient shapes do not match params")
        new_layers.append(DenseParams(
            weights=p.weights - learning_rate * g.weights,
            bias=p.bias - learning_rate * g.bias,
        ))
    return NetworkParams(new_layers)
