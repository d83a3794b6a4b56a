"""Mask-trained concept-to-label models and their checkpoint format.

One network is trained over randomly drawn concept subsets, so the same
checkpoint answers queries for any subset at prediction time. Checkpoints
are plain JSON carrying the schema they were trained against (plus its
fingerprint), the training configuration, per-dimension input extremes and
the layer weights, so a saved model is fully reproducible and self-checking.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import masking, serialize
from .data import ConceptDataset, ConceptSchema
from .errors import CheckpointError, InputError
from .nn import (
    DenseParams,
    NetworkParams,
    TrainConfig,
    forward,
    init_params,
    loss_and_grad,
    mean_loss,
    sgd_step,
)

CHECKPOINT_FORMAT_VERSION = 1


@dataclass(frozen=True)
class Prediction:
    """Class distribution for one input row plus its entropy."""

    probs: np.ndarray
    entropy_nats: float


@dataclass
class ConceptModel:
    """A trained network bound to its concept schema.

    input_min/input_max hold per-dimension extremes of the observed training
    concepts; interventions on unbounded-scale groups use them as the
    "confidently off/on" insertion values.
    """

    schema: ConceptSchema
    params: NetworkParams
    config: TrainConfig
    input_min: np.ndarray
    input_max: np.ndarray

    def predict_proba(self, concepts: np.ndarray, mask: np.ndarray) -> np.ndarray:
        """Class probabilities for rows under one shared group mask, shape (N, C)."""
        batch = masking.augment(self.schema, concepts, mask)
        return forward(self.params, batch)

    def predict_proba_rows(self, concepts: np.ndarray, masks: np.ndarray) -> np.ndarray:
        """Class probabilities with an independent group mask per row."""
        batch = masking.augment_rows(self.schema, concepts, masks)
        return forward(self.params, batch)


def train(dataset: ConceptDataset, config: TrainConfig, on_epoch=None) -> ConceptModel:
    """Fit a network on the training split with per-batch random masks.

    Every batch sees a fresh mask (or one per row with mask_per_row), so the
    model learns the marginal label distribution behind each possible subset.
    All randomness — weight init, shuffling, mask draws — flows from one
    generator seeded by config.seed, making training bit-reproducible.

    on_epoch, if given, is called after every epoch with
    (epoch_index, mean_train_loss, val_loss_or_None); val loss is computed
    (under the full mask) only when early stopping is enabled.
    """
    schema = dataset.schema
    rows = dataset.rows_for_split("train")
    if rows.size == 0:
        raise InputError("dataset has no training rows")
    if config.k_weights is not None and len(config.k_weights) != schema.n_groups:
        raise InputError(
            f"k_weights must have length {schema.n_groups}, got {len(config.k_weights)}")
    inputs = dataset.concepts[rows]
    labels = dataset.labels[rows]

    patience = config.early_stop_patience
    if patience is not None:
        val_rows = dataset.rows_for_split("val")
        if val_rows.size == 0:
            raise InputError("early stopping requires a validation split")
        full_mask = np.ones(schema.n_groups)
        val_batch = masking.augment(schema, dataset.concepts[val_rows], full_mask)
        val_labels = dataset.labels[val_rows]

    rng = np.random.default_rng(config.seed)
    params = init_params(
        masking.augmented_dim(schema), config.hidden_dims, schema.num_classes, rng)
    best_params, best_val, epochs_since_best = params, np.inf, 0

    n = rows.size
    for epoch in range(config.epochs):
        order = rng.permutation(n)
        batch_losses = []
        for start in range(0, n, config.batch_size):
            idx = order[start:start + config.batch_size]
            if config.mask_per_row:
                masks = np.stack([
                    masking.sample_mask(schema.n_groups, rng, config.k_weights)
                    for _ in range(idx.size)])
                batch = masking.augment_rows(schema, inputs[idx], masks)
            else:
                mask = masking.sample_mask(schema.n_groups, rng, config.k_weights)
                batch = masking.augment(schema, inputs[idx], mask)
            loss, grads = loss_and_grad(params, batch, labels[idx])
            batch_losses.append(loss)
            params = sgd_step(params, grads, config.learning_rate)

        val_loss = None
        if patience is not None:
            val_loss = mean_loss(params, val_batch, val_labels)
            if val_loss < best_val:
                best_params, best_val, epochs_since_best = params, val_loss, 0
            else:
                epochs_since_best += 1
        if on_epoch is not None:
            on_epoch(epoch, float(np.mean(batch_losses)), val_loss)
        if patience is not None and epochs_since_best >= patience:
            break

    return ConceptModel(
        schema=schema,
        params=best_params if patience is not None else params,
        config=config,
        input_min=inputs.min(axis=0),
        input_max=inputs.max(axis=0),
    )


def row_entropy_nats(probs: np.ndarray) -> np.ndarray:
    """Shannon entropy of each probability row, in nats; zero terms drop out."""
    p = np.asarray(probs, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(p > 0.0, p * np.log(p), 0.0)
    return -terms.sum(axis=-1)


def ensure_compatible(model: ConceptModel, dataset: ConceptDataset) -> None:
    """Reject model/dataset pairs whose schemas differ (by fingerprint)."""
    model_fp = model.schema.fingerprint()
    data_fp = dataset.schema.fingerprint()
    if model_fp != data_fp:
        raise CheckpointError(
            f"checkpoint was trained against schema {model_fp[:12]}… but the "
            f"dataset uses schema {data_fp[:12]}…")


def predict(model: ConceptModel, concepts: np.ndarray, mask: np.ndarray) -> Prediction:
    """Prediction for a single concept row under the given group mask."""
    concepts = np.asarray(concepts, dtype=np.float64)
    if concepts.ndim != 1:
        raise InputError(f"predict takes a single concept row, got shape {concepts.shape}")
    probs = model.predict_proba(concepts, mask)[0]
    return Prediction(probs=probs, entropy_nats=float(row_entropy_nats(probs)))


def evaluate(model: ConceptModel, dataset: ConceptDataset, masks: np.ndarray,
             split: str = "test") -> dict:
    """Accuracy and mean predictive entropy over one split.

    masks is either a single group mask applied to every row, or one mask
    per row of the split (shape (rows, n_groups)). Argmax ties resolve to
    the lowest class index.
    """
    rows = dataset.rows_for_split(split)
    if rows.size == 0:
        raise InputError(f"dataset has no {split!r} rows")
    masks = np.asarray(masks, dtype=np.float64)
    if masks.ndim == 1:
        probs = model.predict_proba(dataset.concepts[rows], masks)
    else:
        probs = model.predict_proba_rows(dataset.concepts[rows], masks)
    correct = probs.argmax(axis=1) == dataset.labels[rows]
    return {
        "accuracy": float(correct.mean()),
        "mean_entropy_nats": float(row_entropy_nats(probs).mean()),
    }


def accuracy(model: ConceptModel, dataset: ConceptDataset, mask: np.ndarray,
             split: str = "test") -> float:
    """Fraction of rows in `split` whose argmax prediction matches the label."""
    return evaluate(model, dataset, mask, split)["accuracy"]


def save_checkpoint(model: ConceptModel, path) -> None:
    obj = {
        "format_version": CHECKPOINT_FORMAT_VERSION,
        "schema_fingerprint": model.schema.fingerprint(),
        "schema": model.schema.to_obj(),
        "train_config": model.config.to_obj(),
        "input_stats": {
            "min": model.input_min,
            "max": model.input_max,
        },
        "layers": [
            {"weights": layer.weights, "bias": layer.bias}
            for layer in model.params.layers
        ],
    }
    serialize.dump_path(obj, path)


def load_checkpoint(path) -> ConceptModel:
    try:
        obj = serialize.load_path(path)
    except FileNotFoundError:
        raise CheckpointError(f"checkpoint not found: {path}")
    except ValueError as exc:
        raise CheckpointError(f"checkpoint {path} is not valid JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise CheckpointError("checkpoint must be a JSON object")
    version = obj.get("format_version")
    if version != CHECKPOINT_FORMAT_VERSION:
        raise CheckpointError(f"unsupported checkpoint format_version {version!r}")

    try:
        schema = ConceptSchema.from_obj(obj["schema"])
        config = TrainConfig.from_obj(obj["train_config"])
        stats = obj["input_stats"]
        input_min = np.asarray(stats["min"], dtype=np.float64)
        input_max = np.asarray(stats["max"], dtype=np.float64)
        layers = [
            DenseParams(
                weights=np.asarray(layer["weights"], dtype=np.float64),
                bias=np.asarray(layer["bias"], dtype=np.float64),
            )
            for layer in obj["layers"]
        ]
    except (KeyError, TypeError, ValueError) as exc:
        raise CheckpointError(f"malformed checkpoint: {exc}") from exc

    stored = obj.get("schema_fingerprint")
    if schema.fingerprint() != stored:
        raise CheckpointError(
            "schema fingerprint mismatch: checkpoint declares "
            f"{stored!r} but its embedded schema hashes to {schema.fingerprint()!r}")

    if input_min.shape != (schema.total_dims,) or input_max.shape != (schema.total_dims,):
        raise CheckpointError("input_stats must cover every concept dimension")
    if not layers:
        raise CheckpointError("checkpoint has no layers")
    expected_in = masking.augmented_dim(schema)
    for i, layer in enumerate(layers):
        if layer.weights.ndim != 2 or layer.bias.shape != (layer.weights.shape[0],):
            raise CheckpointError(f"layer {i} has inconsistent weight/bias shapes")
        if layer.in_dim != expected_in:
            raise CheckpointError(
                f"layer {i} expects {layer.in_dim} inputs, previous width is {expected_in}")
        expected_in = layer.out_dim
    if expected_in != schema.num_classes:
        raise CheckpointError(
            f"final layer has {expected_in} outputs, schema defines "
            f"{schema.num_classes} classes")

    return ConceptModel(
        schema=schema,
        params=NetworkParams(layers=layers),
        config=config,
        input_min=input_min,
        input_max=input_max,
    )
