import numpy as np
import pytest

from scom import (
    ConceptDataset,
    ConceptGroup,
    ConceptSchema,
    SyntheticSpec,
    assign_splits,
    class_level_oracle,
    generate_synthetic,
    load_dataset,
    load_schema,
    save_dataset,
    save_schema,
    soft_oracle,
)
from scom.errors import IngestionError, InputError, OracleError

from conftest import make_binary_dataset


# --------------------------------------------------------------------------
# schema


def test_schema_layout(tiny_schema):
    assert tiny_schema.n_groups == 3
    assert tiny_schema.total_dims == 4
    assert tiny_schema.group_slice(0) == slice(0, 2)
    assert tiny_schema.group_slice(2) == slice(3, 4)
    assert tiny_schema.dim_columns() == ["color.0", "color.1", "size.0", "score.0"]
    np.testing.assert_array_equal(tiny_schema.group_of_dim(), [0, 0, 1, 2])
    assert tiny_schema.group_index("size") == 1
    with pytest.raises(InputError):
        tiny_schema.group_index("weight")


def test_schema_fingerprint_is_frozen():
    # pinned so accidental format changes to the canonical form are caught
    schema = ConceptSchema(groups=(ConceptGroup("a"), ConceptGroup("b")), num_classes=2)
    assert schema.fingerprint() == (
        "a61bbaf0bdec0710b4ecf2107408ba1d58743d034d3bf4269ed6e3f1b40e0bbf")


def test_schema_fingerprint_ignores_nothing(tiny_schema):
    changed = ConceptSchema(
        groups=tiny_schema.groups[:-1] + (ConceptGroup("score", kind="continuous"),),
        num_classes=tiny_schema.num_classes,
    )
    assert changed.fingerprint() != tiny_schema.fingerprint()


def test_schema_round_trip(tmp_path, tiny_schema):
    path = tmp_path / "schema.json"
    save_schema(tiny_schema, path)
    loaded = load_schema(path)
    assert loaded == tiny_schema
    assert loaded.fingerprint() == tiny_schema.fingerprint()


def test_schema_rejects_duplicate_names():
    with pytest.raises(InputError):
        ConceptSchema(groups=(ConceptGroup("a"), ConceptGroup("a")), num_classes=2)


def test_schema_rejects_bad_kind():
    with pytest.raises(InputError):
        ConceptGroup("a", kind="categorical")


# --------------------------------------------------------------------------
# dataset validation


def test_dataset_rejects_out_of_range_labels():
    with pytest.raises(InputError):
        make_binary_dataset([[0, 1]], [0, 5], num_classes=2)


def test_dataset_rejects_non_binary_values_for_binary_kind():
    with pytest.raises(InputError):
        make_binary_dataset([[0.0, 0.5]], [0, 1])


def test_dataset_rejects_non_finite():
    with pytest.raises(InputError):
        make_binary_dataset([[0.0, float("nan")]], [0, 1])


def test_dataset_rejects_unknown_split():
    with pytest.raises(InputError):
        make_binary_dataset([[0, 1]], [0, 1], split=np.array(["train", "holdout"]))


def test_dataset_arrays_are_read_only(dup_ds):
    with pytest.raises(ValueError):
        dup_ds.concepts[0, 0] = 9.0
    with pytest.raises(ValueError):
        dup_ds.labels[0] = 1


def test_rows_for_split(dup_ds):
    counted = sum(len(dup_ds.rows_for_split(s)) for s in ("train", "val", "test"))
    assert counted == dup_ds.n_rows
    assert set(dup_ds.split[dup_ds.rows_for_split("val")]) == {"val"}


def test_assign_splits_proportions_and_determinism():
    split = assign_splits(1000, seed=4)
    values, counts = np.unique(split, return_counts=True)
    by = dict(zip(values.tolist(), counts.tolist()))
    assert by == {"train": 600, "val": 200, "test": 200}
    np.testing.assert_array_equal(split, assign_splits(1000, seed=4))
    assert not np.array_equal(split, assign_splits(1000, seed=5))


# --------------------------------------------------------------------------
# CSV round trip and ingestion errors


def test_dataset_csv_round_trip(tmp_path, dup_ds):
    schema_path = tmp_path / "schema.json"
    data_path = tmp_path / "data.csv"
    save_schema(dup_ds.schema, schema_path)
    save_dataset(dup_ds, data_path)
    loaded = load_dataset(schema_path, data_path)
    np.testing.assert_array_equal(loaded.concepts, dup_ds.concepts)
    np.testing.assert_array_equal(loaded.labels, dup_ds.labels)
    np.testing.assert_array_equal(loaded.split, dup_ds.split)
    np.testing.assert_array_equal(loaded.true_concepts, dup_ds.true_concepts)
    np.testing.assert_array_equal(loaded.identity, dup_ds.identity)


def write_csv(tmp_path, text):
    schema = ConceptSchema(groups=(ConceptGroup("a"), ConceptGroup("b")), num_classes=2)
    schema_path = tmp_path / "schema.json"
    save_schema(schema, schema_path)
    data_path = tmp_path / "data.csv"
    data_path.write_text(text)
    return schema_path, data_path


def test_load_reports_row_and_column_of_bad_cell(tmp_path):
    schema_path, data_path = write_csv(
        tmp_path, "a.0,b.0,label\n0,1,0\n0,oops,1\n")
    with pytest.raises(IngestionError, match=r"row 2, column 'b\.0'.*'oops'"):
        load_dataset(schema_path, data_path)


def test_load_reports_bad_label(tmp_path):
    schema_path, data_path = write_csv(tmp_path, "a.0,b.0,label\n0,1,7\n")
    with pytest.raises(IngestionError, match=r"row 1.*label.*7"):
        load_dataset(schema_path, data_path)


def test_load_rejects_unknown_column(tmp_path):
    schema_path, data_path = write_csv(tmp_path, "a.0,b.0,label,extra\n0,1,0,9\n")
    with pytest.raises(IngestionError, match="'extra'"):
        load_dataset(schema_path, data_path)


def test_load_rejects_missing_dimension(tmp_path):
    schema_path, data_path = write_csv(tmp_path, "a.0,label\n0,0\n")
    with pytest.raises(IngestionError, match=r"missing column 'b\.0'"):
        load_dataset(schema_path, data_path)


def test_load_rejects_partial_true_columns(tmp_path):
    schema_path, data_path = write_csv(
        tmp_path, "a.0,b.0,label,true.a.0\n0,1,0,0\n")
    with pytest.raises(IngestionError, match=r"true\.b\.0"):
        load_dataset(schema_path, data_path)


def test_load_rejects_ragged_row(tmp_path):
    schema_path, data_path = write_csv(tmp_path, "a.0,b.0,label\n0,1\n")
    with pytest.raises(IngestionError, match="row 1: expected 3 cells, got 2"):
        load_dataset(schema_path, data_path)


def test_load_rejects_empty_file(tmp_path):
    schema_path, data_path = write_csv(tmp_path, "")
    with pytest.raises(IngestionError, match="empty"):
        load_dataset(schema_path, data_path)


def test_load_missing_file(tmp_path):
    schema_path, _ = write_csv(tmp_path, "a.0,b.0,label\n0,1,0\n")
    with pytest.raises(IngestionError, match="not found"):
        load_dataset(schema_path, tmp_path / "nope.csv")


def test_load_assigns_splits_when_column_absent(tmp_path):
    rows = "".join(f"{i % 2},{i % 2},{i % 2}\n" for i in range(10))
    schema_path, data_path = write_csv(tmp_path, "a.0,b.0,label\n" + rows)
    a = load_dataset(schema_path, data_path, split_seed=1)
    b = load_dataset(schema_path, data_path, split_seed=1)
    np.testing.assert_array_equal(a.split, b.split)


# --------------------------------------------------------------------------
# synthetic generators


def test_duplicated_columns_match_and_label_is_bit():
    ds = generate_synthetic(SyntheticSpec("duplicated", 500, noise=0.3, seed=2))
    np.testing.assert_array_equal(ds.concepts[:, 0], ds.concepts[:, 1])
    np.testing.assert_array_equal(ds.true_concepts[:, 0], ds.labels)
    # exact class balance
    assert int(ds.labels.sum()) == 250


def test_duplicated_noise_flips_observations_only():
    ds = generate_synthetic(SyntheticSpec("duplicated", 400, noise=0.5, seed=0))
    flipped = (ds.concepts[:, 0] != ds.true_concepts[:, 0]).mean()
    assert 0.35 < flipped < 0.65
    np.testing.assert_array_equal(ds.true_concepts[:, 0], ds.labels)


def test_xor_label_rule():
    ds = generate_synthetic(SyntheticSpec("xor_distractor", 300, noise=0.0, seed=4))
    c = ds.concepts.astype(int)
    np.testing.assert_array_equal(c[:, 0] ^ c[:, 1], ds.labels)
    assert [g.name for g in ds.schema.groups] == ["c1", "c2", "c3"]


def test_informative_zero_is_balanced_and_label_equals_first_concept():
    ds = generate_synthetic(SyntheticSpec("informative_zero", 600, noise=0.0, seed=9))
    np.testing.assert_array_equal(ds.concepts[:, 0], ds.labels)
    assert int(ds.labels.sum()) == 300


def test_correlated_blocks_structure():
    ds = generate_synthetic(SyntheticSpec("correlated_blocks", 2000, noise=0.0, seed=5))
    assert ds.schema.n_groups == 8
    assert ds.schema.num_classes == 8
    names = [g.name for g in ds.schema.groups]
    assert names == ["b0_0", "b0_1", "b0_2", "b1_0", "b1_1", "b1_2", "b2_0", "b2_1"]
    reps = ds.true_concepts[:, [0, 3, 6]].astype(int)
    np.testing.assert_array_equal(reps[:, 0] + 2 * reps[:, 1] + 4 * reps[:, 2], ds.labels)
    # non-representative members track their block representative up to ~1% flips
    for rep_col, member_col in [(0, 1), (0, 2), (3, 4), (3, 5), (6, 7)]:
        mismatch = (ds.true_concepts[:, rep_col] != ds.true_concepts[:, member_col]).mean()
        assert mismatch < 0.03


def test_generate_is_seed_deterministic():
    a = generate_synthetic(SyntheticSpec("xor_distractor", 100, noise=0.2, seed=7))
    b = generate_synthetic(SyntheticSpec("xor_distractor", 100, noise=0.2, seed=7))
    np.testing.assert_array_equal(a.concepts, b.concepts)
    np.testing.assert_array_equal(a.split, b.split)
    c = generate_synthetic(SyntheticSpec("xor_distractor", 100, noise=0.2, seed=8))
    assert not np.array_equal(a.concepts, c.concepts)


def test_identity_column_is_class_string():
    ds = generate_synthetic(SyntheticSpec("duplicated", 50, seed=0))
    assert set(ds.identity) <= {"0", "1"}
    np.testing.assert_array_equal(ds.identity.astype(int), ds.labels)


def test_synthetic_spec_validation():
    with pytest.raises(InputError):
        SyntheticSpec("nonsense", 10)
    with pytest.raises(InputError):
        SyntheticSpec("duplicated", 0)
    with pytest.raises(InputError):
        SyntheticSpec("duplicated", 10, noise=1.0)


# --------------------------------------------------------------------------
# oracles


def test_class_level_oracle_on_class_determined_task():
    ds = generate_synthetic(SyntheticSpec("duplicated", 200, noise=0.4, seed=3))
    table = class_level_oracle(ds)
    np.testing.assert_array_equal(table, [[0.0, 0.0], [1.0, 1.0]])


def test_class_level_oracle_rejects_non_class_determined_task():
    ds = generate_synthetic(SyntheticSpec("xor_distractor", 200, seed=0))
    with pytest.raises(OracleError, match="class"):
        class_level_oracle(ds)


def test_class_level_oracle_requires_true_concepts():
    ds = make_binary_dataset([[0, 1], [0, 1]], [0, 1])
    with pytest.raises(OracleError):
        class_level_oracle(ds)


def test_soft_oracle_averages_per_identity():
    schema = ConceptSchema(groups=(ConceptGroup("a"),), num_classes=2)
    ds = ConceptDataset(
        schema=schema,
        concepts=np.array([[0.0], [1.0], [1.0], [1.0]]),
        labels=np.array([0, 0, 1, 1]),
        split=np.array(["train"] * 4),
        true_concepts=np.array([[0.0], [1.0], [1.0], [0.0]]),
        identity=np.array(["x", "x", "y", "y"]),
    )
    table = soft_oracle(ds)
    assert table["x"] == pytest.approx([0.5])
    assert table["y"] == pytest.approx([0.5])


def test_soft_oracle_requires_identity():
    ds = make_binary_dataset([[0, 1], [0, 1]], [0, 1])
    with pytest.raises(OracleError):
        soft_oracle(ds)
