"""Read-only JSON-over-HTTP service exposing a trained model and its
dataset to interactive clients.

All endpoints live under /api/v1. Responses are rendered through the same
canonical JSON writer the library and CLI use, so identical queries produce
byte-identical numbers everywhere. Handlers never mutate the loaded model
or dataset; every request is independent.
"""

from __future__ import annotations

import numpy as np
from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import Response
from fastapi.staticfiles import StaticFiles

from . import serialize
from .data import ConceptDataset
from .errors import InputError, ScomError
from .intervention import ORACLES, apply_interventions, oracle_rows, oracle_to_input_space
from .model import ConceptModel, evaluate, predict
from .selection import SelectionRequest, select

API_PREFIX = "/api/v1"


def _json(obj, status_code: int = 200) -> Response:
    return Response(content=serialize.dumps(obj) + "\n",
                    media_type="application/json", status_code=status_code)


def _error(code: str, message: str, status_code: int, detail=None) -> Response:
    return _json({"code": code, "message": message, "detail": detail},
                 status_code=status_code)


def _require(body: dict, key: str):
    if key not in body:
        raise InputError(f"request body is missing {key!r}")
    return body[key]


def _float_list(value, name: str) -> np.ndarray:
    try:
        return np.asarray([float(v) for v in value], dtype=np.float64)
    except (TypeError, ValueError):
        raise InputError(f"{name} must be a list of numbers") from None


def _int_list(value, name: str) -> list[int]:
    try:
        return [int(v) for v in value]
    except (TypeError, ValueError):
        raise InputError(f"{name} must be a list of integers") from None


def create_app(model: ConceptModel, dataset: ConceptDataset,
               ui_dir=None) -> FastAPI:
    app = FastAPI(title="concept model service", docs_url=None, redoc_url=None)
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["GET", "POST"],
        allow_headers=["*"])

    schema = model.schema
    fingerprint = schema.fingerprint()
    class_names = (list(schema.class_names) if schema.class_names is not None
                   else [f"class_{i}" for i in range(schema.num_classes)])

    @app.exception_handler(ScomError)
    async def scom_error_handler(_req: Request, exc: ScomError):
        status = 400 if exc.exit_code == 2 else 500
        return _error(type(exc).__name__, str(exc), status)

    @app.exception_handler(RequestValidationError)
    async def validation_handler(_req: Request, exc: RequestValidationError):
        return _error("validation", "invalid request payload", 400, detail=str(exc))

    @app.exception_handler(Exception)
    async def fallback_handler(_req: Request, exc: Exception):
        return _error("internal", str(exc), 500)

    async def read_body(request: Request) -> dict:
        try:
            body = await request.json()
        except ValueError:
            raise InputError("request body must be JSON")
        if not isinstance(body, dict):
            raise InputError("request body must be a JSON object")
        return body

    @app.get(API_PREFIX + "/meta")
    async def meta():
        return _json({
            "schema": schema.to_obj(),
            "schema_fingerprint": fingerprint,
            "class_names": class_names,
            "n_rows": dataset.n_rows,
            "splits": {s: int(dataset.rows_for_split(s).size)
                       for s in ("train", "val", "test")},
        })

    @app.get(API_PREFIX + "/instance/{index}")
    async def instance(index: int):
        if not 0 <= index < dataset.n_rows:
            raise InputError(f"instance index {index} outside [0, {dataset.n_rows})")
        return _json({
            "index": index,
            "concepts": dataset.concepts[index],
            "label": int(dataset.labels[index]),
            "identity": (str(dataset.identity[index])
                         if dataset.identity is not None else None),
            "split": str(dataset.split[index]),
            "true_concepts": (dataset.true_concepts[index]
                              if dataset.true_concepts is not None else None),
        })

    @app.post(API_PREFIX + "/predict")
    async def predict_route(request: Request):
        body = await read_body(request)
        concepts = _float_list(_require(body, "concepts"), "concepts")
        mask = _float_list(_require(body, "mask"), "mask")
        result = predict(model, concepts, mask)
        return _json({"probs": result.probs, "entropy_nats": result.entropy_nats})

    @app.post(API_PREFIX + "/select")
    async def select_route(request: Request):
        body = await read_body(request)
        method = _require(body, "method")
        k = body.get("k")
        # the trace is always computed in full (k=None) so every size can be
        # read back; k only picks which set is echoed alongside it
        sel_request = SelectionRequest(
            method=method,
            level=body.get("level", "dataset"),
            k=None,
            instance_index=(None if body.get("instance") is None
                            else int(body["instance"])),
            locked_in=frozenset(_int_list(body.get("locked_in", []), "locked_in")),
            excluded=frozenset(_int_list(body.get("excluded", []), "excluded")),
            seed=int(body.get("seed", 0)),
        )
        trace = select(model, dataset, sel_request)
        size = max(trace.sizes()) if k is None else int(k)
        selected = trace.set_at_size(size)
        return _json({
            "k": size,
            "selected": list(selected),
            "selected_names": [schema.groups[g].name for g in selected],
            "trace": trace.to_obj(),
        })

    @app.post(API_PREFIX + "/intervene")
    async def intervene_route(request: Request):
        body = await read_body(request)
        index = int(_require(body, "instance"))
        if not 0 <= index < dataset.n_rows:
            raise InputError(f"instance index {index} outside [0, {dataset.n_rows})")
        mask = _float_list(_require(body, "mask"), "mask")
        fix_groups = _int_list(_require(body, "fix_groups"), "fix_groups")
        oracle = body.get("oracle", "class_level")
        if oracle not in ORACLES:
            raise InputError(f"unknown oracle {oracle!r}")
        values = oracle_to_input_space(
            model, oracle_rows(dataset, oracle, np.array([index])))[0]
        intervened = apply_interventions(
            schema, dataset.concepts[index], mask, values, fix_groups)
        result = predict(model, intervened, mask)
        return _json({
            "probs": result.probs,
            "entropy_nats": result.entropy_nats,
            "intervened_concepts": intervened,
        })

    @app.post(API_PREFIX + "/evaluate")
    async def evaluate_route(request: Request):
        body = await read_body(request)
        mask = _float_list(_require(body, "mask"), "mask")
        split = body.get("split", "test")
        return _json(evaluate(model, dataset, mask, split))

    if ui_dir is not None:
        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app
