"""Concept-subset selection and the exact estimators used to verify it.

Greedy forward selection grows a set one group at a time, always adding the
candidate that minimizes predictive entropy; backward elimination shrinks
from the full set, always removing the group whose loss hurts entropy
least. Low predictive entropy stands in for high mutual information with
the label, which holds whenever the model's conditional matches the data's.
A full run is recorded as a trace from which the chosen set at every size
can be read back without re-running.

For verification, the module also carries a plug-in discrete MI estimator
and a brute-force subset search, both deliberately guarded to small
problems.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .data import ConceptDataset
from .errors import ConstraintError, EstimatorError, IngestionError, InputError
from .model import ConceptModel, ensure_compatible, row_entropy_nats

TRACE_FORMAT_VERSION = 1
METHODS = ("forward", "backward", "random")
LEVELS = ("dataset", "instance")

# Entropy differences at or below this are ties, resolved to the lowest
# group index; the two-pass reduction below makes parallel candidate
# scoring order-independent.
TIE_TOLERANCE_NATS = 1e-12

# Hard guards on the verification oracles: brute force enumerates C(n,k)
# subsets, and the plug-in estimator materializes the joint support.
MAX_EXHAUSTIVE_GROUPS = 12
MAX_JOINT_SUPPORT = 2 ** 20


@dataclass(frozen=True)
class SelectionRequest:
    """What to select: size target, method, granularity and constraints.

    k=None asks for the complete trace (forward: grow to every non-excluded
    group; backward: shrink to the locked-in floor). locked_in groups are
    always kept; excluded groups never appear.
    """

    method: str
    level: str = "dataset"
    k: int | None = None
    instance_index: int | None = None
    locked_in: frozenset = frozenset()
    excluded: frozenset = frozenset()
    seed: int = 0

    def __post_init__(self):
        if self.method not in METHODS:
            raise InputError(f"unknown selection method {self.method!r}")
        if self.level not in LEVELS:
            raise InputError(f"unknown selection level {self.level!r}")
        if (self.instance_index is None) == (self.level == "instance"):
            raise InputError("instance_index is required exactly when level='instance'")
        object.__setattr__(self, "locked_in", frozenset(int(g) for g in self.locked_in))
        object.__setattr__(self, "excluded", frozenset(int(g) for g in self.excluded))
        if self.locked_in & self.excluded:
            raise ConstraintError(
                "groups cannot be both locked in and excluded: "
                + ", ".join(str(g) for g in sorted(self.locked_in & self.excluded)))


@dataclass(frozen=True)
class SelectionStep:
    """One greedy move: the group added/removed, the entropy of the
    resulting set, and that set's size."""

    group: int
    entropy_nats: float | None
    size_after: int


@dataclass(frozen=True)
class SelectionTrace:
    """Complete record of one selection run; sets of every size are
    derivable from it (forward/random: prefixes; backward: what remains
    after the recorded removals)."""

    method: str
    level: str
    n_groups: int
    steps: tuple[SelectionStep, ...]
    locked_in: tuple[int, ...] = ()
    excluded: tuple[int, ...] = ()
    instance_index: int | None = None
    schema_fingerprint: str | None = None
    initial_entropy_nats: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "steps", tuple(self.steps))
        object.__setattr__(self, "locked_in", tuple(sorted(int(g) for g in self.locked_in)))
        object.__setattr__(self, "excluded", tuple(sorted(int(g) for g in self.excluded)))
        groups = [s.group for s in self.steps]
        if len(set(groups)) != len(groups):
            raise InputError("a group appears twice in the trace")
        out_of_range = [g for g in groups if not 0 <= g < self.n_groups]
        if out_of_range:
            raise InputError(f"step group {out_of_range[0]} outside [0, {self.n_groups})")
        sizes = [s.size_after for s in self.steps]
        if self.method == "backward":
            expected = list(range(self.start_size - 1, self.start_size - 1 - len(sizes), -1))
        else:
            expected = list(range(1, len(sizes) + 1))
        if sizes != expected:
            raise InputError(
                f"{self.method} trace must record sizes {expected}, got {sizes}")

    @property
    def start_size(self) -> int:
        """Size of the set the run began from (backward: the full
        non-excluded set; forward/random: empty)."""
        if self.method == "backward":
            return self.n_groups - len(self.excluded)
        return 0

    def set_at_size(self, k: int) -> tuple[int, ...]:
        """The selected group indices at size k, ascending."""
        if self.method == "backward":
            selected = set(range(self.n_groups)) - set(self.excluded)
            recorded = {s.size_after for s in self.steps}
            if k != self.start_size and k not in recorded:
                raise InputError(
                    f"trace does not reach size {k} (smallest recorded: "
                    f"{min(recorded) if recorded else self.start_size})")
            for step in self.steps:
                if step.size_after < k:
                    break
                selected.discard(step.group)
            return tuple(sorted(selected))
        if not 0 <= k <= len(self.steps):
            raise InputError(
                f"trace does not reach size {k} (largest recorded: {len(self.steps)})")
        return tuple(sorted(s.group for s in self.steps[:k]))

    def mask_at_size(self, k: int) -> np.ndarray:
        mask = np.zeros(self.n_groups, dtype=np.float64)
        mask[list(self.set_at_size(k))] = 1.0
        return mask

    def sizes(self) -> list[int]:
        """Every set size readable from this trace, ascending."""
        recorded = sorted(s.size_after for s in self.steps)
        if self.method == "backward":
            return recorded + [self.start_size]
        return [0] + recorded

    def to_obj(self) -> dict:
        return {
            "format_version": TRACE_FORMAT_VERSION,
            "method": self.method,
            "level": self.level,
            "n_groups": self.n_groups,
            "locked_in": list(self.locked_in),
            "excluded": list(self.excluded),
            "instance_index": self.instance_index,
            "schema_fingerprint": self.schema_fingerprint,
            "initial_entropy_nats": self.initial_entropy_nats,
            "steps": [
                {"group": s.group, "entropy_nats": s.entropy_nats,
                 "size_after": s.size_after}
                for s in self.steps
            ],
        }

    @classmethod
    def from_obj(cls, obj: dict) -> "SelectionTrace":
        if not isinstance(obj, dict):
            raise IngestionError("trace document must be a JSON object")
        version = obj.get("format_version")
        if version != TRACE_FORMAT_VERSION:
            raise IngestionError(f"unsupported trace format_version {version!r}")
        try:
            steps = tuple(
                SelectionStep(
                    group=int(s["group"]),
                    entropy_nats=None if s["entropy_nats"] is None else float(s["entropy_nats"]),
                    size_after=int(s["size_after"]),
                )
                for s in obj["steps"])
            initial = obj.get("initial_entropy_nats")
            return cls(
                method=obj["method"],
                level=obj["level"],
                n_groups=int(obj["n_groups"]),
                steps=steps,
                locked_in=tuple(obj.get("locked_in", ())),
                excluded=tuple(obj.get("excluded", ())),
                instance_index=obj.get("instance_index"),
                schema_fingerprint=obj.get("schema_fingerprint"),
                initial_entropy_nats=None if initial is None else float(initial),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise IngestionError(f"malformed trace document: {exc}") from exc
        except InputError as exc:
            raise IngestionError(str(exc)) from exc


def save_trace(trace: SelectionTrace, path) -> None:
    from . import serialize

    serialize.dump_path(trace.to_obj(), path)


def load_trace(path):
    from . import serialize

    try:
        obj = serialize.load_path(path)
    except FileNotFoundError:
        raise IngestionError(f"trace file not found: {path}")
    except ValueError as exc:
        raise IngestionError(f"trace file {path} is not valid JSON: {exc}") from exc
    return SelectionTrace.from_obj(obj)


def _resolve_constraints(n_groups: int, request: SelectionRequest) -> tuple[set, set, int]:
    """Validated (locked_in, excluded, k) against a concrete group count."""
    for g in request.locked_in | request.excluded:
        if not 0 <= g < n_groups:
            raise ConstraintError(f"group index {g} outside [0, {n_groups})")
    locked, excluded = set(request.locked_in), set(request.excluded)
    available = n_groups - len(excluded)
    k = request.k
    if k is None:
        k = len(locked) if request.method == "backward" else available
    if request.method == "random" and k < 1:
        raise ConstraintError("random selection needs k >= 1")
    if not len(locked) <= k <= available:
        raise ConstraintError(
            f"k={k} infeasible: must satisfy {len(locked)} <= k <= {available} "
            f"({len(locked)} locked in, {n_groups - available} excluded)")
    return locked, excluded, k


def _entropy_pool(model: ConceptModel, dataset: ConceptDataset,
                  request: SelectionRequest) -> np.ndarray:
    """Rows whose mean predictive entropy the greedy objective scores."""
    if request.level == "instance":
        if not 0 <= request.instance_index < dataset.n_rows:
            raise InputError(
                f"instance_index {request.instance_index} outside "
                f"[0, {dataset.n_rows})")
        return dataset.concepts[[request.instance_index]]
    rows = dataset.rows_for_split("val")
    if rows.size == 0:
        raise InputError("dataset-level selection needs a non-empty validation split")
    return dataset.concepts[rows]


def _set_entropy(model: ConceptModel, pool: np.ndarray, selected: set) -> float:
    mask = np.zeros(model.schema.n_groups, dtype=np.float64)
    mask[sorted(selected)] = 1.0
    return float(row_entropy_nats(model.predict_proba(pool, mask)).mean())


def _best_candidate(scores: list[tuple[int, float]]) -> tuple[int, float]:
    """Lowest-entropy candidate; ties within TIE_TOLERANCE_NATS go to the
    lowest group index. Two passes, so any parallel scoring order yields
    the same winner."""
    floor = min(score for _, score in scores)
    for group, score in sorted(scores):
        if score <= floor + TIE_TOLERANCE_NATS:
            return group, score
    raise AssertionError("unreachable: floor is attained by some candidate")


def forward_select(model: ConceptModel, dataset: ConceptDataset,
                   request: SelectionRequest) -> SelectionTrace:
    """Grow the set from locked_in, adding the entropy-minimizing candidate
    at every stage until it holds k groups.

    Locked-in groups are recorded as the leading steps (lowest index first,
    scored cumulatively) so the trace covers every size from 1 up.
    """
    if request.method != "forward":
        raise InputError(f"forward_select got method {request.method!r}")
    ensure_compatible(model, dataset)
    n = model.schema.n_groups
    locked, excluded, k = _resolve_constraints(n, request)
    pool = _entropy_pool(model, dataset, request)

    selected: set = set()
    steps: list[SelectionStep] = []
    initial = _set_entropy(model, pool, selected)
    for g in sorted(locked):
        selected.add(g)
        steps.append(SelectionStep(g, _set_entropy(model, pool, selected), len(selected)))
    while len(selected) < k:
        candidates = sorted(set(range(n)) - excluded - selected)
        scores = [(g, _set_entropy(model, pool, selected | {g})) for g in candidates]
        group, score = _best_candidate(scores)
        selected.add(group)
        steps.append(SelectionStep(group, score, len(selected)))

    return SelectionTrace(
        method="forward", level=request.level, n_groups=n, steps=tuple(steps),
        locked_in=tuple(sorted(locked)), excluded=tuple(sorted(excluded)),
        instance_index=request.instance_index,
        schema_fingerprint=model.schema.fingerprint(),
        initial_entropy_nats=initial,
    )


def backward_eliminate(model: ConceptModel, dataset: ConceptDataset,
                       request: SelectionRequest) -> SelectionTrace:
    """Shrink from the full non-excluded set, removing the group whose
    removal minimizes entropy, stopping at size max(k, locked_in)."""
    if request.method != "backward":
        raise InputError(f"backward_eliminate got method {request.method!r}")
    ensure_compatible(model, dataset)
    n = model.schema.n_groups
    locked, excluded, k = _resolve_constraints(n, request)
    pool = _entropy_pool(model, dataset, request)

    selected = set(range(n)) - excluded
    steps: list[SelectionStep] = []
    initial = _set_entropy(model, pool, selected)
    while len(selected) > k:
        candidates = sorted(selected - locked)
        scores = [(g, _set_entropy(model, pool, selected - {g})) for g in candidates]
        group, score = _best_candidate(scores)
        selected.discard(group)
        steps.append(SelectionStep(group, score, len(selected)))

    return SelectionTrace(
        method="backward", level=request.level, n_groups=n, steps=tuple(steps),
        locked_in=tuple(sorted(locked)), excluded=tuple(sorted(excluded)),
        instance_index=request.instance_index,
        schema_fingerprint=model.schema.fingerprint(),
        initial_entropy_nats=initial,
    )


def random_select(n_groups: int, request: SelectionRequest,
                  schema_fingerprint: str | None = None) -> SelectionTrace:
    """Seeded baseline: a uniformly random ordering of the non-excluded
    groups (locked_in first), whose size-k prefix is a uniform k-subset
    among those containing locked_in."""
    if request.method != "random":
        raise InputError(f"random_select got method {request.method!r}")
    locked, excluded, _ = _resolve_constraints(n_groups, request)
    rng = np.random.default_rng(request.seed)
    rest = sorted(set(range(n_groups)) - excluded - locked)
    order = sorted(locked) + [rest[i] for i in rng.permutation(len(rest))]
    steps = tuple(
        SelectionStep(group=g, entropy_nats=None, size_after=i + 1)
        for i, g in enumerate(order))
    return SelectionTrace(
        method="random", level=request.level, n_groups=n_groups, steps=steps,
        locked_in=tuple(sorted(locked)), excluded=tuple(sorted(excluded)),
        instance_index=request.instance_index,
        schema_fingerprint=schema_fingerprint,
    )


def select(model: ConceptModel, dataset: ConceptDataset,
           request: SelectionRequest) -> SelectionTrace:
    """Dispatch to the requested selection method."""
    if request.method == "forward":
        return forward_select(model, dataset, request)
    if request.method == "backward":
        return backward_eliminate(model, dataset, request)
    return random_select(model.schema.n_groups, request,
                         schema_fingerprint=model.schema.fingerprint())


@dataclass(frozen=True)
class MIEstimate:
    subset: tuple[int, ...]
    mi_bits: float
    estimator: str = "plugin_discrete"


def _entropy_bits(counts: np.ndarray) -> float:
    p = counts / counts.sum()
    p = p[p > 0]
    return float(-(p * np.log2(p)).sum())


def _subset_codes(dataset: ConceptDataset, subset: tuple[int, ...],
                  rows: np.ndarray) -> np.ndarray:
    """Encode each row's values over `subset` as one integer."""
    schema = dataset.schema
    codes = np.zeros(rows.size, dtype=np.int64)
    for g in subset:
        sl = schema.group_slice(g)
        for d in range(sl.start, sl.stop):
            codes = codes * 2 + dataset.concepts[rows, d].astype(np.int64)
    return codes


def _mi_rows(dataset: ConceptDataset, split: str | None) -> np.ndarray:
    if split is None:
        return np.arange(dataset.n_rows)
    return dataset.rows_for_split(split)


def plugin_mi(dataset: ConceptDataset, subset, split: str | None = None) -> MIEstimate:
    """Plug-in mutual information, in bits, between a concept subset and
    the label, from the empirical joint distribution.

    Only binary-kind groups are supported: the estimator counts joint
    outcomes, which has no analogue for continuous values. The joint
    support (product of group arities) is capped to keep the table in
    memory. Pass split to restrict the empirical distribution to one split.
    """
    schema = dataset.schema
    subset = tuple(sorted(int(g) for g in set(subset)))
    support = 1
    for g in subset:
        if not 0 <= g < schema.n_groups:
            raise InputError(f"group index {g} outside [0, {schema.n_groups})")
        group = schema.groups[g]
        if group.kind != "binary":
            raise EstimatorError(
                f"group {group.name!r} has kind {group.kind!r}; the plug-in "
                "estimator only handles binary groups — non-discrete values "
                "are exactly what the entropy proxy exists for")
        support *= 2 ** group.dims
    if support > MAX_JOINT_SUPPORT:
        raise EstimatorError(
            f"joint support {support} exceeds {MAX_JOINT_SUPPORT}; "
            "use the greedy entropy proxy for subsets this large")

    rows = _mi_rows(dataset, split)
    if rows.size == 0:
        raise InputError(f"no rows in split {split!r}")
    if not subset:
        return MIEstimate(subset=subset, mi_bits=0.0)
    codes = _subset_codes(dataset, subset, rows)
    labels = dataset.labels[rows]
    _, c_counts = np.unique(codes, return_counts=True)
    _, y_counts = np.unique(labels, return_counts=True)
    _, cy_counts = np.unique(codes * dataset.schema.num_classes + labels,
                             return_counts=True)
    mi = _entropy_bits(c_counts) + _entropy_bits(y_counts) - _entropy_bits(cy_counts)
    return MIEstimate(subset=subset, mi_bits=max(0.0, mi))


@dataclass(frozen=True)
class BestSubset:
    subset: tuple[int, ...]
    score: float
    objective: str


def exhaustive_best_subset(dataset: ConceptDataset, k: int,
                           objective: str = "plugin_mi",
                           model: ConceptModel | None = None,
                           split: str | None = None) -> BestSubset:
    """Try every size-k subset and return the best one.

    objective "plugin_mi" maximizes plug-in MI with the label;
    "proxy_entropy" minimizes the model's mean predictive entropy (requires
    model; rows drawn from split, default validation). Exact ties go to the
    lexicographically smallest subset. Guarded to n <= 12 groups — this is
    a verification oracle, not a selection method.
    """
    n = dataset.schema.n_groups
    if n > MAX_EXHAUSTIVE_GROUPS:
        raise EstimatorError(
            f"{n} groups is past the brute-force guard "
            f"({MAX_EXHAUSTIVE_GROUPS}); use forward/backward selection")
    if not 0 <= k <= n:
        raise InputError(f"k must lie in [0, {n}], got {k}")
    if objective not in ("plugin_mi", "proxy_entropy"):
        raise InputError(f"unknown objective {objective!r}")

    if objective == "proxy_entropy":
        if model is None:
            raise InputError("objective 'proxy_entropy' requires a model")
        ensure_compatible(model, dataset)
        rows = _mi_rows(dataset, "val" if split is None else split)
        if rows.size == 0:
            raise InputError("no rows to score")
        pool = dataset.concepts[rows]
        best, best_score = None, np.inf
        for subset in itertools.combinations(range(n), k):
            score = _set_entropy(model, pool, set(subset))
            if score < best_score:
                best, best_score = subset, score
        return BestSubset(subset=best, score=best_score, objective=objective)

    best, best_score = None, -np.inf
    for subset in itertools.combinations(range(n), k):
        score = plugin_mi(dataset, subset, split=split).mi_bits
        if score > best_score:
            best, best_score = subset, score
    return BestSubset(subset=best, score=best_score, objective=objective)
