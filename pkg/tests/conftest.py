"""Shared fixtures: synthetic datasets and models trained once per session.

Training is deterministic, so every test sees the exact same model for a
given (dataset seed, train seed) pair.
"""
from __future__ import annotations

import numpy as np
import pytest

from scom import (
    ConceptGroup,
    ConceptSchema,
    ConceptDataset,
    SyntheticSpec,
    TrainConfig,
    generate_synthetic,
    train,
)


@pytest.fixture(scope="session")
def dup_ds():
    return generate_synthetic(SyntheticSpec("duplicated", 2000, noise=0.1, seed=1))


@pytest.fixture(scope="session")
def dup_model(dup_ds):
    return train(dup_ds, TrainConfig(seed=0))


@pytest.fixture(scope="session")
def xor_ds():
    return generate_synthetic(SyntheticSpec("xor_distractor", 2000, noise=0.05, seed=3))


@pytest.fixture(scope="session")
def xor_model(xor_ds):
    return train(xor_ds, TrainConfig(seed=0))


@pytest.fixture(scope="session")
def iz_ds():
    return generate_synthetic(SyntheticSpec("informative_zero", 2000, noise=0.0, seed=1))


@pytest.fixture(scope="session")
def iz_model(iz_ds):
    return train(iz_ds, TrainConfig(seed=0))


@pytest.fixture(scope="session")
def blocks_ds():
    return generate_synthetic(SyntheticSpec("correlated_blocks", 2000, noise=0.0, seed=5))


@pytest.fixture(scope="session")
def blocks_model(blocks_ds):
    return train(blocks_ds, TrainConfig(seed=0))


@pytest.fixture()
def tiny_schema():
    return ConceptSchema(
        groups=(
            ConceptGroup("color", dims=2),
            ConceptGroup("size"),
            ConceptGroup("score", kind="logit"),
        ),
        num_classes=3,
    )


def make_binary_dataset(concept_cols, labels, names=None, num_classes=None, split=None):
    """Build a small all-train dataset from plain lists (helper, not a fixture)."""
    concepts = np.column_stack([np.asarray(c, dtype=np.float64) for c in concept_cols])
    labels = np.asarray(labels, dtype=np.int64)
    names = names or [f"g{i}" for i in range(concepts.shape[1])]
    schema = ConceptSchema(
        groups=tuple(ConceptGroup(n) for n in names),
        num_classes=num_classes or int(labels.max()) + 1,
    )
    if split is None:
        split = np.array(["train"] * len(labels))
    return ConceptDataset(schema=schema, concepts=concepts, labels=labels, split=split)
