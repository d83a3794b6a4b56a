#!/usr/bin/env python3
"""Record the API fixture session the UI tests replay.

Runs the real service in-process against a deterministic synthetic dataset
and writes every request/response pair (exact response text included) to
api_fixtures.json. The request bodies are derived the same way the UI's
flow helpers derive them, so the TypeScript parity test can rebuild each
body independently and demand an exact match.

Regenerate with:  python3 frontend/tests/fixtures/generate.py
"""
from __future__ import annotations

import json
import math
import pathlib

from fastapi.testclient import TestClient

from scom import SyntheticSpec, TrainConfig, generate_synthetic, train
from scom.service import API_PREFIX, create_app

OUT = pathlib.Path(__file__).resolve().parent / "api_fixtures.json"

INSTANCE = 17
SEED = 0


def record(client: TestClient, calls: list, name: str, method: str, path: str, body=None):
    if method == "GET":
        r = client.get(API_PREFIX + path)
    else:
        r = client.post(API_PREFIX + path, json=body)
    calls.append({
        "name": name,
        "method": method,
        "path": API_PREFIX + path,
        "body": body,
        "status": r.status_code,
        "response_text": r.text,
    })
    return r.json()


def mask_from_selection(n_groups: int, selected: list[int]) -> list[int]:
    mask = [0] * n_groups
    for g in selected:
        mask[g] = 1
    return mask


def toggled(mask: list[int], group: int) -> list[int]:
    out = list(mask)
    out[group] = 0 if out[group] else 1
    return out


def main() -> None:
    ds = generate_synthetic(SyntheticSpec("duplicated", 2000, noise=0.1, seed=1))
    model = train(ds, TrainConfig(seed=SEED))
    client = TestClient(create_app(model, ds), raise_server_exceptions=False)

    session: list = []
    meta = record(client, session, "meta", "GET", "/meta")
    n_groups = len(meta["schema"]["groups"])

    inst = record(client, session, "instance", "GET", f"/instance/{INSTANCE}")
    concepts = inst["concepts"]
    full_mask = [1] * n_groups

    initial = record(client, session, "predict_initial", "POST", "/predict",
                     {"concepts": concepts, "mask": full_mask})
    assert math.isclose(sum(initial["probs"]), 1.0, abs_tol=1e-6)

    suggestion = record(client, session, "suggest_k1", "POST", "/select",
                        {"method": "backward", "k": 1, "seed": SEED, "level": "dataset"})
    assert len(suggestion["selected"]) == 1
    suggested_mask = mask_from_selection(n_groups, suggestion["selected"])

    record(client, session, "predict_suggested", "POST", "/predict",
           {"concepts": concepts, "mask": suggested_mask})

    off_group = next(g for g in range(n_groups) if g not in suggestion["selected"])
    toggled_mask = toggled(suggested_mask, off_group)
    assert toggled_mask == full_mask
    record(client, session, "predict_toggled_full", "POST", "/predict",
           {"concepts": concepts, "mask": toggled_mask})

    record(client, session, "intervene_first", "POST", "/intervene",
           {"instance": INSTANCE, "mask": full_mask, "fix_groups": [0],
            "oracle": "class_level"})
    everything = record(client, session, "intervene_all", "POST", "/intervene",
                        {"instance": INSTANCE, "mask": full_mask,
                         "fix_groups": list(range(n_groups)), "oracle": "class_level"})

    # Predicting the fully intervened row must reproduce the intervention's
    # own numbers: the UI relies on this when it re-requests after edits.
    echoed = record(client, session, "predict_intervened", "POST", "/predict",
                    {"concepts": everything["intervened_concepts"], "mask": full_mask})
    assert echoed["probs"] == everything["probs"]
    assert echoed["entropy_nats"] == everything["entropy_nats"]

    constrained = record(client, session, "suggest_excluding", "POST", "/select",
                         {"method": "backward", "k": 1, "seed": SEED,
                          "level": "dataset", "excluded": [0]})
    assert 0 not in constrained["selected"]

    record(client, session, "evaluate_full", "POST", "/evaluate",
           {"mask": full_mask, "split": "test"})

    errors: list = []
    record(client, errors, "predict_missing_concepts", "POST", "/predict",
           {"mask": full_mask})
    assert errors[-1]["status"] == 400

    OUT.write_text(json.dumps({
        "dataset": {"generator": "duplicated", "n": 2000, "noise": 0.1, "seed": 1,
                    "train_seed": SEED},
        "instance": INSTANCE,
        "session": session,
        "errors": errors,
    }, indent=2) + "\n")
    print(f"wrote {OUT} ({len(session)} session calls, {len(errors)} error calls)")


if __name__ == "__main__":
    main()
