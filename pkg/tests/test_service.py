import json

import numpy as np
import pytest
from fastapi.testclient import TestClient

from scom import SelectionRequest, apply_interventions, evaluate, predict, select
from scom.intervention import oracle_rows, oracle_to_input_space
from scom.serialize import dumps
from scom.service import API_PREFIX, create_app


@pytest.fixture(scope="module")
def client(dup_model, dup_ds):
    return TestClient(create_app(dup_model, dup_ds), raise_server_exceptions=False)


def url(path):
    return API_PREFIX + path


# --------------------------------------------------------------------------
# read endpoints


def test_meta(client, dup_ds):
    r = client.get(url("/meta"))
    assert r.status_code == 200
    assert r.headers["content-type"].startswith("application/json")
    body = r.json()
    assert body["schema_fingerprint"] == dup_ds.schema.fingerprint()
    assert body["n_rows"] == dup_ds.n_rows
    assert body["class_names"] == ["class_0", "class_1"]
    assert sum(body["splits"].values()) == dup_ds.n_rows
    assert [g["name"] for g in body["schema"]["groups"]] == ["c1", "c2"]


def test_instance(client, dup_ds):
    r = client.get(url("/instance/17"))
    assert r.status_code == 200
    body = r.json()
    assert body["index"] == 17
    assert body["concepts"] == dup_ds.concepts[17].tolist()
    assert body["label"] == int(dup_ds.labels[17])
    assert body["split"] in ("train", "val", "test")
    assert body["identity"] == str(dup_ds.identity[17])
    assert body["true_concepts"] == dup_ds.true_concepts[17].tolist()


def test_instance_out_of_range(client):
    r = client.get(url("/instance/999999"))
    assert r.status_code == 400
    body = r.json()
    assert set(body) == {"code", "message", "detail"}
    assert body["code"] == "InputError"
    assert "outside" in body["message"]


def test_instance_non_integer_path(client):
    r = client.get(url("/instance/seventeen"))
    assert r.status_code == 400
    assert r.json()["code"] == "validation"


# --------------------------------------------------------------------------
# prediction


def test_predict_matches_library_byte_for_byte(client, dup_model, dup_ds):
    for idx in (0, 5, 9):
        payload = {"concepts": dup_ds.concepts[idx].tolist(), "mask": [1, 0]}
        r = client.post(url("/predict"), json=payload)
        assert r.status_code == 200
        expected = predict(dup_model, dup_ds.concepts[idx], np.array([1.0, 0.0]))
        assert r.text == dumps({"probs": expected.probs,
                                "entropy_nats": expected.entropy_nats}) + "\n"


def test_predict_missing_key(client):
    r = client.post(url("/predict"), json={"concepts": [0, 0]})
    assert r.status_code == 400
    assert "mask" in r.json()["message"]


def test_predict_bad_mask(client):
    r = client.post(url("/predict"), json={"concepts": [0, 0], "mask": [1, 0.5]})
    assert r.status_code == 400


def test_predict_non_numeric(client):
    r = client.post(url("/predict"), json={"concepts": ["a", "b"], "mask": [1, 1]})
    assert r.status_code == 400
    assert r.json()["code"] == "InputError"


def test_body_must_be_json_object(client):
    r = client.post(url("/predict"),
                    content=b"[1,2,3]", headers={"content-type": "application/json"})
    assert r.status_code == 400
    r = client.post(url("/predict"),
                    content=b"{nope", headers={"content-type": "application/json"})
    assert r.status_code == 400


# --------------------------------------------------------------------------
# selection


def test_select_matches_library(client, dup_model, dup_ds):
    r = client.post(url("/select"), json={"method": "backward", "k": 1})
    assert r.status_code == 200
    body = r.json()
    trace = select(dup_model, dup_ds, SelectionRequest(method="backward"))
    assert body["k"] == 1
    assert tuple(body["selected"]) == trace.set_at_size(1)
    assert body["selected_names"] == [["c1", "c2"][g] for g in body["selected"]]
    assert body["trace"] == json.loads(dumps(trace.to_obj()))


def test_select_defaults_to_full_size(client):
    r = client.post(url("/select"), json={"method": "forward"})
    assert r.status_code == 200
    assert r.json()["k"] == 2


def test_select_with_constraints(client):
    r = client.post(url("/select"),
                    json={"method": "random", "k": 1, "locked_in": [1], "seed": 4})
    assert r.status_code == 200
    assert r.json()["selected"] == [1]


def test_select_unknown_method(client):
    r = client.post(url("/select"), json={"method": "bogus"})
    assert r.status_code == 400
    assert r.json()["code"] == "InputError"


def test_select_conflicting_constraints(client):
    r = client.post(url("/select"),
                    json={"method": "forward", "locked_in": [0], "excluded": [0]})
    assert r.status_code == 400
    assert r.json()["code"] == "ConstraintError"


# --------------------------------------------------------------------------
# interventions


def test_intervene_matches_library(client, dup_model, dup_ds):
    idx = int(dup_ds.rows_for_split("test")[0])
    r = client.post(url("/intervene"),
                    json={"instance": idx, "mask": [1, 1], "fix_groups": [0],
                          "oracle": "class_level"})
    assert r.status_code == 200
    values = oracle_to_input_space(
        dup_model, oracle_rows(dup_ds, "class_level", np.array([idx])))[0]
    fixed = apply_interventions(dup_ds.schema, dup_ds.concepts[idx],
                                np.array([1.0, 1.0]), values, [0])
    expected = predict(dup_model, fixed, np.array([1.0, 1.0]))
    body = r.json()
    assert body["intervened_concepts"] == fixed.tolist()
    assert r.text == dumps({"probs": expected.probs,
                            "entropy_nats": expected.entropy_nats,
                            "intervened_concepts": fixed}) + "\n"


def test_intervene_on_masked_group_is_rejected(client):
    r = client.post(url("/intervene"),
                    json={"instance": 0, "mask": [0, 1], "fix_groups": [0]})
    assert r.status_code == 400
    assert r.json()["code"] == "ConstraintError"


def test_intervene_unknown_oracle(client):
    r = client.post(url("/intervene"),
                    json={"instance": 0, "mask": [1, 1], "fix_groups": [0],
                          "oracle": "tarot"})
    assert r.status_code == 400


# --------------------------------------------------------------------------
# evaluation


def test_evaluate_matches_library(client, dup_model, dup_ds):
    r = client.post(url("/evaluate"), json={"mask": [1, 1], "split": "test"})
    assert r.status_code == 200
    expected = evaluate(dup_model, dup_ds, np.array([1.0, 1.0]), split="test")
    assert r.text == dumps(expected) + "\n"


def test_evaluate_bad_split(client):
    r = client.post(url("/evaluate"), json={"mask": [1, 1], "split": "holdout"})
    assert r.status_code == 400


# --------------------------------------------------------------------------
# cross-cutting behavior


def test_cors_allows_any_origin(client):
    r = client.get(url("/meta"), headers={"origin": "http://localhost:5173"})
    assert r.headers.get("access-control-allow-origin") == "*"


def test_internal_errors_are_500_with_shape(dup_model, dup_ds):
    broken = type(dup_model)(
        schema=dup_model.schema, params=dup_model.params, config=dup_model.config,
        input_min=dup_model.input_min, input_max=dup_model.input_max)
    def boom(*a, **k):
        raise RuntimeError("wires crossed")
    broken.predict_proba = boom
    client = TestClient(create_app(broken, dup_ds), raise_server_exceptions=False)
    r = client.post(url("/predict"), json={"concepts": [0, 0], "mask": [1, 1]})
    assert r.status_code == 500
    body = r.json()
    assert body["code"] == "internal"
    assert "wires crossed" in body["message"]


def test_ui_mount_serves_static_files(tmp_path, dup_model, dup_ds):
    (tmp_path / "index.html").write_text("<!doctype html><title>ui</title>")
    client = TestClient(create_app(dup_model, dup_ds, ui_dir=tmp_path))
    r = client.get("/")
    assert r.status_code == 200
    assert "ui" in r.text
    # API still reachable alongside the UI
    assert client.get(url("/meta")).status_code == 200


def test_no_ui_mount_by_default(client):
    assert client.get("/").status_code == 404


def test_responses_are_stable_across_repeated_calls(client):
    payload = {"concepts": [1.0, 0.0], "mask": [1, 1]}
    first = client.post(url("/predict"), json=payload).text
    for _ in range(10):
        assert client.post(url("/predict"), json=payload).text == first


def test_fingerprint_stable_across_thousand_mixed_requests(client, dup_ds):
    """A long interleaving of reads, predictions, selections and failed
    requests must never change what the service reports about its model."""
    baseline = client.get(url("/meta")).json()["schema_fingerprint"]
    rng = np.random.default_rng(0)
    for i in range(1000):
        kind = i % 5
        if kind == 0:
            idx = int(rng.integers(0, dup_ds.n_rows))
            assert client.get(url(f"/instance/{idx}")).status_code == 200
        elif kind == 1:
            row = dup_ds.concepts[int(rng.integers(0, dup_ds.n_rows))]
            mask = [int(rng.integers(0, 2)), 1]
            r = client.post(url("/predict"),
                            json={"concepts": row.tolist(), "mask": mask})
            assert r.status_code == 200
        elif kind == 2:
            r = client.post(url("/select"),
                            json={"method": "random", "k": 1,
                                  "seed": int(rng.integers(0, 10))})
            assert r.status_code == 200
        elif kind == 3:
            assert client.post(url("/predict"), json={}).status_code == 400
        else:
            r = client.post(url("/evaluate"), json={"mask": [1, 0]})
            assert r.status_code == 200
        if i % 100 == 0:
            assert client.get(url("/meta")).json()["schema_fingerprint"] == baseline
    assert client.get(url("/meta")).json()["schema_fingerprint"] == baseline
