"""Concept-subset masks and the masked-input encoding.

A mask is a binary vector over concept groups (1 = visible). During
training, masks are drawn in two steps — first a visible-group count k,
then a uniformly random k-subset — so every subset size gets equal
exposure regardless of how many subsets of that size exist. Masked inputs
concatenate the zeroed concept values with the group-level mask itself,
letting the model distinguish "hidden" from "observed to be zero".
"""

from __future__ import annotations

import numpy as np

from .data import ConceptSchema
from .errors import InputError


def mask_from_groups(schema: ConceptSchema, visible: "set[str] | set[int]") -> np.ndarray:
    """Binary group mask from a collection of group names or indices."""
    mask = np.zeros(schema.n_groups, dtype=np.float64)
    for item in visible:
        g = schema.group_index(item) if isinstance(item, str) else int(item)
        if not 0 <= g < schema.n_groups:
            raise InputError(f"group index {g} out of range [0, {schema.n_groups})")
        mask[g] = 1.0
    return mask


def visible_groups(schema: ConceptSchema, mask: np.ndarray) -> list[str]:
    mask = _check_mask(schema, mask)
    return [schema.groups[g].name for g in np.flatnonzero(mask)]


def _check_mask(schema: ConceptSchema, mask: np.ndarray) -> np.ndarray:
    mask = np.asarray(mask, dtype=np.float64)
    if mask.shape != (schema.n_groups,):
        raise InputError(
            f"mask must have shape ({schema.n_groups},), got {mask.shape}")
    if not np.isin(mask, (0.0, 1.0)).all():
        raise InputError("mask entries must be 0 or 1")
    return mask


def expand_mask(schema: ConceptSchema, mask: np.ndarray) -> np.ndarray:
    """Per-dimension visibility vector for a group-level mask."""
    return _check_mask(schema, mask)[schema.group_of_dim()]


def augment(schema: ConceptSchema, concepts: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Encode masked concepts as [values * visibility ; group mask].

    concepts may be a single row (D,) or a batch (N, D); the result always
    has the batch layout (N, D + n_groups). The same group mask is applied
    to every row.
    """
    concepts = np.asarray(concepts, dtype=np.float64)
    single = concepts.ndim == 1
    if single:
        concepts = concepts[None, :]
    if concepts.ndim != 2 or concepts.shape[1] != schema.total_dims:
        raise InputError(
            f"concepts must have {schema.total_dims} columns, got shape {concepts.shape}")
    mask = _check_mask(schema, mask)
    zeroed = concepts * expand_mask(schema, mask)[None, :]
    tiled = np.broadcast_to(mask, (concepts.shape[0], schema.n_groups))
    return np.concatenate([zeroed, tiled], axis=1)


def augment_rows(schema: ConceptSchema, concepts: np.ndarray, masks: np.ndarray) -> np.ndarray:
    """augment() with an independent group mask per row; masks is (N, n_groups)."""
    concepts = np.asarray(concepts, dtype=np.float64)
    masks = np.asarray(masks, dtype=np.float64)
    if concepts.ndim != 2 or concepts.shape[1] != schema.total_dims:
        raise InputError(
            f"concepts must have {schema.total_dims} columns, got shape {concepts.shape}")
    if masks.shape != (concepts.shape[0], schema.n_groups):
        raise InputError(
            f"masks must have shape ({concepts.shape[0]}, {schema.n_groups}), "
            f"got {masks.shape}")
    if not np.isin(masks, (0.0, 1.0)).all():
        raise InputError("mask entries must be 0 or 1")
    zeroed = concepts * masks[:, schema.group_of_dim()]
    return np.concatenate([zeroed, masks], axis=1)


def augmented_dim(schema: ConceptSchema) -> int:
    return schema.total_dims + schema.n_groups


def sample_subset_size(n_groups: int, rng: np.random.Generator,
                       k_weights: "tuple[float, ...] | None" = None) -> int:
    """Draw the visible-group count k from {1, .., n_groups}.

    Uniform by default; k_weights (length n_groups, entry i weighting
    k = i + 1) reweights the draw. k = 0 is never sampled — the empty
    subset still appears at evaluation time, and excluding it from training
    spends capacity on informative masks.
    """
    if n_groups < 1:
        raise InputError("n_groups must be >= 1")
    if k_weights is None:
        return int(rng.integers(1, n_groups + 1))
    weights = np.asarray(k_weights, dtype=np.float64)
    if weights.shape != (n_groups,):
        raise InputError(
            f"k_weights must have length {n_groups}, got shape {weights.shape}")
    if np.any(weights < 0) or weights.sum() <= 0:
        raise InputError("k_weights must be non-negative with positive sum")
    return int(rng.choice(n_groups, p=weights / weights.sum())) + 1


def sample_k_subset(n_groups: int, k: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform k-subset of groups as a binary mask (partial Fisher-Yates)."""
    if not 0 <= k <= n_groups:
        raise InputError(f"k must lie in [0, {n_groups}], got {k}")
    pool = np.arange(n_groups)
    for i in range(k):
        j = int(rng.integers(i, n_groups))
        pool[i], pool[j] = pool[j], pool[i]
    mask = np.zeros(n_groups, dtype=np.float64)
    mask[pool[:k]] = 1.0
    return mask


def sample_mask(n_groups: int, rng: np.random.Generator,
                k_weights: "tuple[float, ...] | None" = None) -> np.ndarray:
    """Two-step training mask draw: size first, then a uniform subset of that size."""
    k = sample_subset_size(n_groups, rng, k_weights)
    return sample_k_subset(n_groups, k, rng)
