"""Accuracy-vs-set-size tables across selection methods, and evaluation of
externally supplied per-instance selections.

External selection files carry one chosen group set per instance; rows are
grouped by set size so they can sit in the same table as the trace-driven
methods, under method name "external".
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from . import serialize
from .data import ConceptDataset, ConceptSchema
from .errors import IngestionError, InputError
from .intervention import mean_and_stderr
from .model import ConceptModel, ensure_compatible, evaluate, row_entropy_nats
from .selection import SelectionTrace

REPORT_FORMAT_VERSION = 1
REPORT_COLUMNS = ("method", "k", "accuracy", "stderr",
                  "mean_entropy_nats", "mean_entropy_bits", "source")


@dataclass(frozen=True)
class SelectionFileRow:
    """One externally chosen concept set for one dataset row."""

    instance_id: int
    groups: tuple[int, ...]


def load_selection_file(path, schema: ConceptSchema, n_rows: int) -> list[SelectionFileRow]:
    """Read a CSV of per-instance selections: instance_id, selected
    (semicolon-separated group names). Bad rows are reported by number."""
    try:
        fh = open(path, "r", encoding="utf-8", newline="")
    except FileNotFoundError:
        raise IngestionError(f"selection file not found: {path}")
    out: list[SelectionFileRow] = []
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise IngestionError(f"selection file {path} is empty")
        if sorted(header) != ["instance_id", "selected"]:
            raise IngestionError(
                "selection file header must be instance_id,selected "
                f"(got {','.join(header)})")
        pos = {c: i for i, c in enumerate(header)}
        for row_num, row in enumerate(reader, start=1):
            if len(row) != 2:
                raise IngestionError(f"selection file row {row_num}: expected 2 cells")
            raw_id = row[pos["instance_id"]]
            try:
                instance_id = int(raw_id)
            except ValueError:
                raise IngestionError(
                    f"selection file row {row_num}: non-integer instance_id "
                    f"{raw_id!r}") from None
            if not 0 <= instance_id < n_rows:
                raise IngestionError(
                    f"selection file row {row_num}: instance_id {instance_id} "
                    f"outside [0, {n_rows})")
            raw_sel = row[pos["selected"]].strip()
            groups: list[int] = []
            if raw_sel:
                for name in raw_sel.split(";"):
                    name = name.strip()
                    try:
                        groups.append(schema.group_index(name))
                    except InputError:
                        raise IngestionError(
                            f"selection file row {row_num}: unknown group name "
                            f"{name!r}") from None
            if len(set(groups)) != len(groups):
                raise IngestionError(
                    f"selection file row {row_num}: a group is selected twice")
            out.append(SelectionFileRow(instance_id=instance_id,
                                        groups=tuple(sorted(groups))))
    if not out:
        raise IngestionError(f"selection file {path} has no rows")
    return out


def evaluate_selection_rows(model: ConceptModel, dataset: ConceptDataset,
                            file_rows: list[SelectionFileRow]) -> list[dict]:
    """Accuracy per set size, each instance evaluated under its own mask.

    Returns one dict per distinct size k, ascending: accuracy and its
    standard error over the instances of that size, plus mean entropy.
    """
    ensure_compatible(model, dataset)
    n = model.schema.n_groups
    by_k: dict[int, list[SelectionFileRow]] = {}
    for row in file_rows:
        by_k.setdefault(len(row.groups), []).append(row)

    out = []
    for k in sorted(by_k):
        rows = by_k[k]
        ids = np.array([r.instance_id for r in rows])
        masks = np.zeros((len(rows), n))
        for i, r in enumerate(rows):
            masks[i, list(r.groups)] = 1.0
        probs = model.predict_proba_rows(dataset.concepts[ids], masks)
        correct = (probs.argmax(axis=1) == dataset.labels[ids]).astype(np.float64)
        entropy = row_entropy_nats(probs).mean()
        accuracy, stderr = mean_and_stderr(correct)
        out.append({
            "k": k,
            "n_instances": int(correct.size),
            "accuracy": accuracy,
            "stderr": stderr,
            "mean_entropy_nats": float(entropy),
            "mean_entropy_bits": float(entropy / np.log(2.0)),
        })
    return out


def accuracy_table(model: ConceptModel, dataset: ConceptDataset,
                   traces: list[SelectionTrace], ks=None,
                   external: "list[tuple[str, list[SelectionFileRow]]] | None" = None,
                   split: str = "test") -> list[dict]:
    """One row per (method, k): accuracy ± stderr plus mean entropy.

    Traces sharing a method (e.g. several random seeds) are averaged, with
    the standard error taken over traces. External selections contribute
    rows under method "external", grouped by their own set sizes; `source`
    carries the file label.
    """
    ensure_compatible(model, dataset)
    if ks is None:
        ks = list(range(1, model.schema.n_groups + 1))
    ks = [int(k) for k in ks]

    methods: dict[str, list[SelectionTrace]] = {}
    for trace in traces:
        methods.setdefault(trace.method, []).append(trace)

    out = []
    for method, group in methods.items():
        for k in ks:
            accs, ents = [], []
            for trace in group:
                ev = evaluate(model, dataset, trace.mask_at_size(k), split)
                accs.append(ev["accuracy"])
                ents.append(ev["mean_entropy_nats"])
            accuracy, stderr = mean_and_stderr(np.asarray(accs))
            nats = float(np.mean(ents))
            out.append({
                "method": method, "k": k,
                "accuracy": accuracy, "stderr": stderr,
                "mean_entropy_nats": nats,
                "mean_entropy_bits": nats / float(np.log(2.0)),
                "source": "",
            })
    for label, file_rows in external or []:
        for row in evaluate_selection_rows(model, dataset, file_rows):
            out.append({
                "method": "external", "k": row["k"],
                "accuracy": row["accuracy"], "stderr": row["stderr"],
                "mean_entropy_nats": row["mean_entropy_nats"],
                "mean_entropy_bits": row["mean_entropy_bits"],
                "source": label,
            })
    return out


def save_report_csv(rows: list[dict], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(REPORT_COLUMNS) + "\n")
        for row in rows:
            cells = []
            for col in REPORT_COLUMNS:
                value = row.get(col, "")
                if isinstance(value, float):
                    cells.append(serialize.format_float(value))
                else:
                    cells.append(str(value))
            fh.write(",".join(cells) + "\n")


def save_report_json(rows: list[dict], provenance: dict, path) -> None:
    serialize.dump_path({
        "format_version": REPORT_FORMAT_VERSION,
        "provenance": provenance,
        "rows": rows,
    }, path)
