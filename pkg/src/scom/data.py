"""Concept schemas, dataset ingestion, synthetic generators and oracle tables.

A schema names the concept groups (each spanning one or more input
dimensions) and fixes the class count; a dataset is an immutable bundle of
observed concept values, labels and optional ground-truth columns backing
the oracles. Synthetic generators build small datasets whose information
structure is known exactly, so selection and intervention behaviour can be
verified against first principles.
"""

from __future__ import annotations

import csv
import hashlib
from dataclasses import dataclass, field

import numpy as np

from . import serialize
from .errors import IngestionError, InputError, OracleError

SCHEMA_FORMAT_VERSION = 1
KINDS = ("binary", "logit", "continuous")
SPLITS = ("train", "val", "test")

GENERATORS = ("duplicated", "xor_distractor", "informative_zero", "correlated_blocks")

# correlated_blocks construction constants: three blocks of near-duplicate
# binary concepts; non-representative members flip with probability 0.01,
# keeping every within-block pairwise correlation above 0.95.
BLOCK_SIZES = (3, 3, 2)
BLOCK_MEMBER_FLIP = 0.01


@dataclass(frozen=True)
class ConceptGroup:
    name: str
    dims: int = 1
    kind: str = "binary"

    def __post_init__(self):
        if not self.name:
            raise InputError("group name must be non-empty")
        if self.dims < 1:
            raise InputError(f"group {self.name!r}: dims must be >= 1")
        if self.kind not in KINDS:
            raise InputError(f"group {self.name!r}: unknown kind {self.kind!r}")


@dataclass(frozen=True)
class ConceptSchema:
    """Named concept groups plus the label space they predict into."""

    groups: tuple[ConceptGroup, ...]
    num_classes: int
    class_names: tuple[str, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "groups", tuple(self.groups))
        if self.class_names is not None:
            object.__setattr__(self, "class_names", tuple(self.class_names))
        names = [g.name for g in self.groups]
        if len(set(names)) != len(names):
            raise InputError("group names must be unique")
        if self.num_classes < 2:
            raise InputError(f"num_classes must be >= 2, got {self.num_classes}")
        if self.class_names is not None and len(self.class_names) != self.num_classes:
            raise InputError("class_names length must equal num_classes")

    @property
    def n_groups(self) -> int:
        return len(self.groups)

    @property
    def total_dims(self) -> int:
        return sum(g.dims for g in self.groups)

    def group_index(self, name: str) -> int:
        for i, g in enumerate(self.groups):
            if g.name == name:
                return i
        raise InputError(f"no concept group named {name!r}")

    def group_slice(self, g: int) -> slice:
        start = sum(grp.dims for grp in self.groups[:g])
        return slice(start, start + self.groups[g].dims)

    def dim_columns(self) -> list[str]:
        return [f"{g.name}.{j}" for g in self.groups for j in range(g.dims)]

    def group_of_dim(self) -> np.ndarray:
        """Group index owning each concept dimension, length total_dims."""
        return np.repeat(np.arange(self.n_groups), [g.dims for g in self.groups])

    def to_obj(self) -> dict:
        return {
            "format_version": SCHEMA_FORMAT_VERSION,
            "groups": [{"name": g.name, "dims": g.dims, "kind": g.kind} for g in self.groups],
            "num_classes": self.num_classes,
            "class_names": list(self.class_names) if self.class_names is not None else None,
        }

    @classmethod
    def from_obj(cls, obj: dict) -> "ConceptSchema":
        if not isinstance(obj, dict) or "groups" not in obj:
            raise IngestionError("schema document must be an object with a 'groups' list")
        version = obj.get("format_version")
        if version != SCHEMA_FORMAT_VERSION:
            raise IngestionError(f"unsupported schema format_version {version!r}")
        try:
            groups = tuple(
                ConceptGroup(name=g["name"], dims=int(g.get("dims", 1)),
                             kind=g.get("kind", "binary"))
                for g in obj["groups"])
            names = obj.get("class_names")
            return cls(groups=groups, num_classes=int(obj["num_classes"]),
                       class_names=tuple(names) if names is not None else None)
        except (KeyError, TypeError, ValueError) as exc:
            raise IngestionError(f"malformed schema document: {exc}") from exc

    def fingerprint(self) -> str:
        """sha256 of the canonical schema JSON; keys sorted so the hash is layout-free."""
        text = serialize.dumps(self.to_obj(), sort_keys=True)
        return hashlib.sha256(text.encode("utf-8")).hexdigest()


def load_schema(path) -> ConceptSchema:
    try:
        obj = serialize.load_path(path)
    except FileNotFoundError:
        raise IngestionError(f"schema file not found: {path}")
    except ValueError as exc:
        raise IngestionError(f"schema file {path} is not valid JSON: {exc}") from exc
    return ConceptSchema.from_obj(obj)


def save_schema(schema: ConceptSchema, path) -> None:
    serialize.dump_path(schema.to_obj(), path)


@dataclass
class ConceptDataset:
    """Immutable concept matrix + labels, with optional oracle-backing columns.

    concepts is (N, D) observed values in model-input space; true_concepts,
    when present, holds ground-truth values in the same layout. identity is a
    per-row grouping key for the soft oracle. split assigns each row to
    train/val/test.
    """

    schema: ConceptSchema
    concepts: np.ndarray
    labels: np.ndarray
    split: np.ndarray
    true_concepts: np.ndarray | None = None
    identity: np.ndarray | None = None

    def __post_init__(self):
        self.concepts = np.asarray(self.concepts, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        self.split = np.asarray(self.split, dtype=np.str_)
        if self.true_concepts is not None:
            self.true_concepts = np.asarray(self.true_concepts, dtype=np.float64)
        if self.identity is not None:
            self.identity = np.asarray(self.identity, dtype=np.str_)
        self._validate()
        for arr in (self.concepts, self.labels, self.split, self.true_concepts, self.identity):
            if arr is not None:
                arr.setflags(write=False)

    def _validate(self) -> None:
        n, d = self.concepts.shape if self.concepts.ndim == 2 else (-1, -1)
        if d != self.schema.total_dims:
            raise InputError(
                f"concept matrix has {d} columns, schema defines {self.schema.total_dims}")
        if not np.all(np.isfinite(self.concepts)):
            raise InputError("concept values must be finite")
        for name, arr in (("labels", self.labels), ("split", self.split),
                          ("true_concepts", self.true_concepts), ("identity", self.identity)):
            if arr is not None and arr.shape[0] != n:
                raise InputError(f"{name} has {arr.shape[0]} rows, expected {n}")
        if self.labels.size and (self.labels.min() < 0 or self.labels.max() >= self.schema.num_classes):
            raise InputError(f"labels must lie in [0, {self.schema.num_classes})")
        if not set(np.unique(self.split)) <= set(SPLITS):
            raise InputError(f"split values must be one of {SPLITS}")
        for g, grp in enumerate(self.schema.groups):
            if grp.kind != "binary":
                continue
            sl = self.schema.group_slice(g)
            for label, arr in (("observed", self.concepts), ("true", self.true_concepts)):
                if arr is not None and not np.isin(arr[:, sl], (0.0, 1.0)).all():
                    raise InputError(
                        f"{label} values of binary group {grp.name!r} must be 0 or 1")

    @property
    def n_rows(self) -> int:
        return self.concepts.shape[0]

    def rows_for_split(self, split: str) -> np.ndarray:
        if split not in SPLITS:
            raise InputError(f"unknown split {split!r}")
        return np.flatnonzero(self.split == split)


def assign_splits(n: int, seed: int = 0) -> np.ndarray:
    """Deterministic 60/20/20 split by seeded shuffle."""
    order = np.random.default_rng(seed).permutation(n)
    split = np.empty(n, dtype="<U5")
    n_train = int(n * 0.6)
    n_val = int(n * 0.2)
    split[order[:n_train]] = "train"
    split[order[n_train:n_train + n_val]] = "val"
    split[order[n_train + n_val:]] = "test"
    return split


def _parse_cell(raw: str, row: int, column: str) -> float:
    try:
        return float(raw)
    except ValueError:
        raise IngestionError(
            f"row {row}, column {column!r}: non-numeric value {raw!r}") from None


def load_dataset(schema_file, data_file, split_seed: int = 0) -> ConceptDataset:
    """Load a delimited concept file against its schema.

    The header must carry one column per concept dimension (`<group>.<j>`)
    plus `label`; `identity`, `true.<group>.<j>` and `split` are optional.
    Malformed cells are reported with their 1-based data row number.
    """
    schema = load_schema(schema_file)
    dim_cols = schema.dim_columns()
    true_cols = [f"true.{c}" for c in dim_cols]

    try:
        fh = open(data_file, "r", encoding="utf-8", newline="")
    except FileNotFoundError:
        raise IngestionError(f"data file not found: {data_file}")
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise IngestionError(f"data file {data_file} is empty")
        known = set(dim_cols) | set(true_cols) | {"label", "identity", "split"}
        for col in header:
            if col not in known:
                raise IngestionError(f"unexpected column {col!r}")
        if len(set(header)) != len(header):
            raise IngestionError("duplicate column in header")
        pos = {c: i for i, c in enumerate(header)}
        missing = [c for c in dim_cols + ["label"] if c not in pos]
        if missing:
            raise IngestionError(f"missing column {missing[0]!r}")
        has_true = any(c in pos for c in true_cols)
        if has_true:
            missing_true = [c for c in true_cols if c not in pos]
            if missing_true:
                raise IngestionError(
                    f"missing column {missing_true[0]!r} (true.* columns must cover every dimension)")

        concepts, labels, trues, identities, splits = [], [], [], [], []
        for row_num, row in enumerate(reader, start=1):
            if len(row) != len(header):
                raise IngestionError(
                    f"row {row_num}: expected {len(header)} cells, got {len(row)}")
            concepts.append([_parse_cell(row[pos[c]], row_num, c) for c in dim_cols])
            raw_label = row[pos["label"]]
            try:
                label = int(raw_label)
            except ValueError:
                raise IngestionError(
                    f"row {row_num}, column 'label': non-integer value {raw_label!r}") from None
            if not 0 <= label < schema.num_classes:
                raise IngestionError(
                    f"row {row_num}, column 'label': value {label} outside "
                    f"[0, {schema.num_classes})")
            labels.append(label)
            if has_true:
                trues.append([_parse_cell(row[pos[c]], row_num, c) for c in true_cols])
            if "identity" in pos:
                identities.append(row[pos["identity"]])
            if "split" in pos:
                value = row[pos["split"]]
                if value not in SPLITS:
                    raise IngestionError(
                        f"row {row_num}, column 'split': unknown split {value!r}")
                splits.append(value)

    n = len(concepts)
    if n == 0:
        raise IngestionError(f"data file {data_file} has no rows")
    split = np.array(splits) if splits else assign_splits(n, split_seed)
    try:
        return ConceptDataset(
            schema=schema,
            concepts=np.array(concepts, dtype=np.float64),
            labels=np.array(labels, dtype=np.int64),
            split=split,
            true_concepts=np.array(trues, dtype=np.float64) if trues else None,
            identity=np.array(identities, dtype=np.str_) if identities else None,
        )
    except InputError as exc:
        raise IngestionError(str(exc)) from exc


def save_dataset(dataset: ConceptDataset, path) -> None:
    """Write the dataset as CSV; floats use shortest round-trip form."""
    schema = dataset.schema
    header = list(schema.dim_columns()) + ["label"]
    if dataset.identity is not None:
        header.append("identity")
    if dataset.true_concepts is not None:
        header.extend(f"true.{c}" for c in schema.dim_columns())
    header.append("split")

    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for i in range(dataset.n_rows):
            row = [repr(float(v)) for v in dataset.concepts[i]]
            row.append(str(int(dataset.labels[i])))
            if dataset.identity is not None:
                row.append(str(dataset.identity[i]))
            if dataset.true_concepts is not None:
                row.extend(repr(float(v)) for v in dataset.true_concepts[i])
            row.append(str(dataset.split[i]))
            writer.writerow(row)


@dataclass(frozen=True)
class SyntheticSpec:
    generator: str
    n_instances: int
    noise: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.generator not in GENERATORS:
            raise InputError(f"unknown generator {self.generator!r}")
        if self.n_instances < 1:
            raise InputError("n_instances must be >= 1")
        if not 0.0 <= self.noise < 1.0:
            raise InputError("noise must lie in [0, 1)")


def _balanced_bits(n: int, rng: np.random.Generator) -> np.ndarray:
    bits = np.repeat([0, 1], [(n + 1) // 2, n // 2])
    return rng.permutation(bits)


def _flip(bits: np.ndarray, flips: np.ndarray) -> np.ndarray:
    return np.where(flips, 1 - bits, bits)


def _binary_schema(names: list[str], num_classes: int) -> ConceptSchema:
    return ConceptSchema(
        groups=tuple(ConceptGroup(name) for name in names),
        num_classes=num_classes,
    )


def generate_synthetic(spec: SyntheticSpec) -> ConceptDataset:
    """Build one of the fixed verification datasets.

    duplicated        c2 is an exact copy of c1; the label equals c1. Noise
                      flips both observed copies together so the columns stay
                      identical.
    xor_distractor    label = c1 XOR c2; c3 is independent coin flips, so no
                      single concept carries label information.
    informative_zero  label = c1, with c1 exactly balanced so a 0 value is as
                      informative as a 1; c2 is an uninformative distractor
                      that keeps masks hiding c1 inside the training
                      distribution.
    correlated_blocks three blocks of near-duplicate concepts (sizes 3/3/2);
                      the label is the 3-bit integer formed by the block
                      representatives, giving 8 classes.

    The `noise` parameter flips observed values (ground truth stays clean);
    identities equal the class label; splits are 60/20/20. Draw order is
    fixed (true values, then observation noise, then splits) so a seed pins
    the whole dataset.
    """
    rng = np.random.default_rng(spec.seed)
    n = spec.n_instances
    builder = {
        "duplicated": _gen_duplicated,
        "xor_distractor": _gen_xor_distractor,
        "informative_zero": _gen_informative_zero,
        "correlated_blocks": _gen_correlated_blocks,
    }[spec.generator]
    schema, observed, true, labels = builder(n, spec.noise, rng)
    return ConceptDataset(
        schema=schema,
        concepts=observed.astype(np.float64),
        labels=labels,
        split=assign_splits(n, int(rng.integers(2**63))),
        true_concepts=true.astype(np.float64),
        identity=labels.astype(np.str_),
    )


def _gen_duplicated(n, noise, rng):
    bits = _balanced_bits(n, rng)
    flips = rng.random(n) < noise
    observed_col = _flip(bits, flips)
    observed = np.column_stack([observed_col, observed_col])
    true = np.column_stack([bits, bits])
    return _binary_schema(["c1", "c2"], 2), observed, true, bits.astype(np.int64)


def _gen_xor_distractor(n, noise, rng):
    true = rng.integers(0, 2, size=(n, 3))
    labels = (true[:, 0] ^ true[:, 1]).astype(np.int64)
    observed = _flip(true, rng.random((n, 3)) < noise)
    return _binary_schema(["c1", "c2", "c3"], 2), observed, true, labels


def _gen_informative_zero(n, noise, rng):
    c1 = _balanced_bits(n, rng)
    c2 = rng.integers(0, 2, size=n)
    true = np.column_stack([c1, c2])
    observed = _flip(true, rng.random((n, 2)) < noise)
    return _binary_schema(["c1", "c2"], 2), observed, true, c1.astype(np.int64)


def _gen_correlated_blocks(n, noise, rng):
    reps = rng.integers(0, 2, size=(n, len(BLOCK_SIZES)))
    cols, names = [], []
    for b, size in enumerate(BLOCK_SIZES):
        cols.append(reps[:, b])
        names.append(f"b{b}_0")
        for j in range(1, size):
            cols.append(reps[:, b] ^ (rng.random(n) < BLOCK_MEMBER_FLIP))
            names.append(f"b{b}_{j}")
    true = np.column_stack(cols)
    labels = (reps[:, 0] + 2 * reps[:, 1] + 4 * reps[:, 2]).astype(np.int64)
    observed = _flip(true, rng.random(true.shape) < noise)
    return _binary_schema(names, 2 ** len(BLOCK_SIZES)), observed, true, labels


def class_level_oracle(dataset: ConceptDataset) -> np.ndarray:
    """Ground-truth concept vector per class, shape (num_classes, D).

    Requires true concepts that are constant within every class; classes
    violating that (or absent from the data) are reported by index.
    """
    if dataset.true_concepts is None:
        raise OracleError("class-level oracle requires true concept columns")
    num_classes = dataset.schema.num_classes
    table = np.zeros((num_classes, dataset.schema.total_dims))
    inconsistent, missing = [], []
    for y in range(num_classes):
        rows = dataset.true_concepts[dataset.labels == y]
        if rows.shape[0] == 0:
            missing.append(y)
            continue
        if np.any(rows != rows[0]):
            inconsistent.append(y)
            continue
        table[y] = rows[0]
    if inconsistent:
        raise OracleError(
            "true concepts are not constant within class(es) "
            + ", ".join(str(y) for y in inconsistent))
    if missing:
        raise OracleError("no rows for class(es) " + ", ".join(str(y) for y in missing))
    return table


def soft_oracle(dataset: ConceptDataset) -> dict[str, np.ndarray]:
    """Mean ground-truth concept vector per identity."""
    if dataset.identity is None:
        raise OracleError("soft oracle requires an identity column")
    if dataset.true_concepts is None:
        raise OracleError("soft oracle requires true concept columns")
    table: dict[str, np.ndarray] = {}
    for key in sorted(set(dataset.identity.tolist())):
        rows = dataset.true_concepts[dataset.identity == key]
        table[key] = rows.mean(axis=0)
    return table
