"""Oracle interventions: replacing observed concept values with ground
truth at prediction time, and sweeping accuracy against the number of
intervened groups for each concept-set size.

Intervening is only defined inside the visible set — fixing a group the
model cannot see is rejected rather than silently ignored.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import serialize
from .data import ConceptDataset, class_level_oracle, soft_oracle
from .errors import ConstraintError, InputError
from .model import ConceptModel, ensure_compatible
from .selection import SelectionTrace

SWEEP_FORMAT_VERSION = 1
ORACLES = ("class_level", "soft")
ORDERS = ("random", "user")


@dataclass(frozen=True)
class InterventionPlan:
    """How interventions are chosen: which oracle supplies values, in what
    order groups are fixed (seeded random or a user-given order), and how
    many interventions at most."""

    oracle: str
    order: str = "random"
    indices: tuple[int, ...] | None = None
    seed: int = 0
    max_interventions: int | None = None

    def __post_init__(self):
        if self.oracle not in ORACLES:
            raise InputError(f"unknown oracle {self.oracle!r}")
        if self.order not in ORDERS:
            raise InputError(f"unknown intervention order {self.order!r}")
        if self.order == "user":
            if not self.indices:
                raise InputError("order='user' requires a non-empty indices list")
            object.__setattr__(self, "indices", tuple(int(g) for g in self.indices))
            if len(set(self.indices)) != len(self.indices):
                raise InputError("user intervention order repeats a group")
        elif self.indices is not None:
            raise InputError("indices are only meaningful with order='user'")
        if self.max_interventions is not None and self.max_interventions < 0:
            raise InputError("max_interventions must be >= 0")


@dataclass(frozen=True)
class SweepRow:
    k: int
    interventions: int
    accuracy: float
    stderr: float

    def __post_init__(self):
        if self.interventions > self.k:
            raise InputError(
                f"{self.interventions} interventions inside a set of size {self.k}")
        if not 0.0 <= self.accuracy <= 1.0:
            raise InputError(f"accuracy {self.accuracy} outside [0, 1]")


@dataclass(frozen=True)
class SweepReport:
    rows: tuple[SweepRow, ...]
    seeds: int

    def __post_init__(self):
        object.__setattr__(self, "rows", tuple(self.rows))

    def to_obj(self) -> dict:
        return {
            "format_version": SWEEP_FORMAT_VERSION,
            "seeds": self.seeds,
            "rows": [
                {"k": r.k, "interventions": r.interventions,
                 "accuracy": r.accuracy, "stderr": r.stderr}
                for r in self.rows
            ],
        }


def save_sweep_csv(report: SweepReport, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("k,interventions,accuracy,stderr\n")
        for r in report.rows:
            fh.write(f"{r.k},{r.interventions},"
                     f"{serialize.format_float(r.accuracy)},"
                     f"{serialize.format_float(r.stderr)}\n")


def save_sweep_json(report: SweepReport, path, provenance: dict | None = None) -> None:
    obj = report.to_obj()
    if provenance is not None:
        obj["provenance"] = provenance
    serialize.dump_path(obj, path)


def mean_and_stderr(vals: np.ndarray) -> tuple[float, float]:
    """Sample mean and standard error; n identical values yield that exact
    value with zero error, keeping deterministic columns bit-stable."""
    vals = np.asarray(vals, dtype=np.float64)
    if np.all(vals == vals[0]):
        return float(vals[0]), 0.0
    return float(vals.mean()), float(vals.std(ddof=1) / np.sqrt(vals.size))


def oracle_rows(dataset: ConceptDataset, oracle: str, rows: np.ndarray) -> np.ndarray:
    """Ground-truth concept vector for each of the given rows, per its
    class (class_level) or its identity's mean (soft)."""
    if oracle not in ORACLES:
        raise InputError(f"unknown oracle {oracle!r}")
    if oracle == "class_level":
        table = class_level_oracle(dataset)
        return table[dataset.labels[rows]]
    table = soft_oracle(dataset)
    return np.stack([table[str(key)] for key in dataset.identity[rows]])


def oracle_to_input_space(model: ConceptModel, values: np.ndarray) -> np.ndarray:
    """Map oracle concept values onto the model's input scale.

    binary and continuous groups pass through unchanged. For logit groups
    the oracle's [0,1] value interpolates between that dimension's training
    minimum and maximum, so a confident 0/1 lands on the most extreme value
    the model has ever seen.
    """
    out = np.array(values, dtype=np.float64)
    single = out.ndim == 1
    if single:
        out = out[None, :]
    if out.shape[1] != model.schema.total_dims:
        raise InputError(
            f"oracle values must have {model.schema.total_dims} columns, "
            f"got shape {values.shape}")
    for g, group in enumerate(model.schema.groups):
        if group.kind != "logit":
            continue
        sl = model.schema.group_slice(g)
        lo, hi = model.input_min[sl], model.input_max[sl]
        out[:, sl] = lo + out[:, sl] * (hi - lo)
    return out[0] if single else out


def apply_interventions(schema, concepts: np.ndarray, mask: np.ndarray,
                        oracle_values: np.ndarray, groups_to_fix) -> np.ndarray:
    """Replace the fixed groups' dimensions with oracle values.

    concepts and oracle_values may be single rows (D,) or batches (N, D);
    every group in groups_to_fix must be visible under mask. The mask and
    all other dimensions are untouched; the input arrays are never mutated.
    """
    concepts = np.array(concepts, dtype=np.float64)
    oracle_values = np.asarray(oracle_values, dtype=np.float64)
    if concepts.shape != oracle_values.shape:
        raise InputError(
            f"oracle values shape {oracle_values.shape} does not match "
            f"concepts shape {concepts.shape}")
    mask = np.asarray(mask, dtype=np.float64)
    for g in groups_to_fix:
        g = int(g)
        if not 0 <= g < schema.n_groups:
            raise InputError(f"group index {g} outside [0, {schema.n_groups})")
        if mask[g] != 1.0:
            raise ConstraintError(
                f"cannot intervene on group {schema.groups[g].name!r}: "
                "it is masked out of the visible set")
        sl = schema.group_slice(g)
        concepts[..., sl] = oracle_values[..., sl]
    return concepts


def intervention_sweep(model: ConceptModel, dataset: ConceptDataset,
                       trace: SelectionTrace, ks, plan: InterventionPlan,
                       seeds: int, split: str = "test") -> SweepReport:
    """Mean accuracy after 0..max interventions, for each set size in ks.

    For every (seed, k) an intervention order over the size-k set is drawn
    (or taken from the plan), then accuracy is measured after fixing the
    first i groups to oracle values, for i = 0 up to the cap. Rows report
    the mean and standard error over seeds. The i=0 column touches nothing
    and reproduces plain evaluation exactly.
    """
    if seeds < 1:
        raise InputError("seeds must be >= 1")
    ensure_compatible(model, dataset)
    schema = model.schema
    rows = dataset.rows_for_split(split)
    if rows.size == 0:
        raise InputError(f"dataset has no {split!r} rows")
    observed = dataset.concepts[rows]
    labels = dataset.labels[rows]
    oracle_inputs = oracle_to_input_space(model, oracle_rows(dataset, plan.oracle, rows))

    def acc(concept_rows: np.ndarray, mask: np.ndarray) -> float:
        probs = model.predict_proba(concept_rows, mask)
        return float((probs.argmax(axis=1) == labels).mean())

    out_rows: list[SweepRow] = []
    for k in ks:
        k = int(k)
        selected = trace.set_at_size(k)
        mask = trace.mask_at_size(k)
        max_i = k if plan.max_interventions is None else min(plan.max_interventions, k)
        if plan.order == "user":
            stray = [g for g in plan.indices if g not in set(selected)]
            if stray:
                raise ConstraintError(
                    f"user intervention order names group {stray[0]}, which is "
                    f"not in the size-{k} selected set")
            max_i = min(max_i, len(plan.indices))

        by_i: dict[int, list[float]] = {i: [] for i in range(max_i + 1)}
        for s in range(seeds):
            if plan.order == "random":
                rng = np.random.default_rng([plan.seed, s, k])
                order = [selected[j] for j in rng.permutation(len(selected))]
            else:
                order = list(plan.indices)
            by_i[0].append(acc(observed, mask))
            current = observed.copy()
            for i in range(1, max_i + 1):
                sl = schema.group_slice(order[i - 1])
                current[:, sl] = oracle_inputs[:, sl]
                by_i[i].append(acc(current, mask))

        for i in range(max_i + 1):
            mean, stderr = mean_and_stderr(np.asarray(by_i[i]))
            out_rows.append(SweepRow(k=k, interventions=i,
                                     accuracy=mean, stderr=stderr))

    return SweepReport(rows=tuple(out_rows), seeds=seeds)
