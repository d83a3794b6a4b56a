"""Run configuration: one JSON file naming the dataset files, training
hyperparameters, selection defaults, report directory and service binding.

Relative paths resolve against the config file's own directory, so a config
can travel with its data. The SCOM_SEED environment variable, when set,
overrides both the training seed and the selection seed.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, replace
from pathlib import Path

from .errors import IngestionError, InputError
from .nn import TrainConfig
from .selection import LEVELS, METHODS

SEED_ENV_VAR = "SCOM_SEED"

_TOP_LEVEL_KEYS = {"schema", "data", "checkpoint", "report_dir",
                   "train", "selection", "service"}


@dataclass(frozen=True)
class SelectionDefaults:
    method: str = "backward"
    level: str = "dataset"
    k: int | None = None
    seed: int = 0

    def __post_init__(self):
        if self.method not in METHODS:
            raise InputError(f"unknown selection method {self.method!r}")
        if self.level not in LEVELS:
            raise InputError(f"unknown selection level {self.level!r}")


@dataclass(frozen=True)
class RunConfig:
    schema_path: Path
    data_path: Path
    checkpoint_path: Path
    report_dir: Path
    train: TrainConfig
    selection: SelectionDefaults
    host: str = "127.0.0.1"
    port: int = 8765
    config_hash: str = ""

    def __post_init__(self):
        if not 1 <= self.port <= 65535:
            raise InputError(f"port must lie in [1, 65535], got {self.port}")


def load_config(path, env: "dict | None" = None) -> RunConfig:
    """Parse and validate a run config; dataset paths must exist."""
    env = os.environ if env is None else env
    path = Path(path)
    try:
        raw = path.read_bytes()
    except FileNotFoundError:
        raise IngestionError(f"config file not found: {path}")
    try:
        obj = json.loads(raw)
    except ValueError as exc:
        raise IngestionError(f"config file {path} is not valid JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise IngestionError("config must be a JSON object")
    unknown = set(obj) - _TOP_LEVEL_KEYS
    if unknown:
        raise IngestionError(f"unknown config key {sorted(unknown)[0]!r}")

    base = path.parent

    def resolve(key: str, default: str | None = None, must_exist: bool = False) -> Path:
        value = obj.get(key, default)
        if value is None:
            raise IngestionError(f"config is missing required key {key!r}")
        resolved = (base / value).resolve() if not Path(value).is_absolute() else Path(value)
        if must_exist and not resolved.exists():
            raise IngestionError(f"config {key!r} path does not exist: {resolved}")
        return resolved

    try:
        train = TrainConfig.from_obj(obj.get("train", {}))
    except TypeError as exc:
        raise IngestionError(f"bad train section: {exc}") from exc
    try:
        selection = SelectionDefaults(**obj.get("selection", {}))
    except TypeError as exc:
        raise IngestionError(f"bad selection section: {exc}") from exc
    service = obj.get("service", {})
    if not isinstance(service, dict) or set(service) - {"host", "port"}:
        raise IngestionError("service section only takes host and port")

    if SEED_ENV_VAR in env:
        try:
            seed = int(env[SEED_ENV_VAR])
        except ValueError:
            raise InputError(
                f"{SEED_ENV_VAR} must be an integer, got {env[SEED_ENV_VAR]!r}")
        train = replace(train, seed=seed)
        selection = replace(selection, seed=seed)

    return RunConfig(
        schema_path=resolve("schema", must_exist=True),
        data_path=resolve("data", must_exist=True),
        checkpoint_path=resolve("checkpoint", default="model.json"),
        report_dir=resolve("report_dir", default="reports"),
        train=train,
        selection=selection,
        host=service.get("host", "127.0.0.1"),
        port=int(service.get("port", 8765)),
        config_hash=hashlib.sha256(raw).hexdigest(),
    )
