import io

import numpy as np
import pytest
from hypothesis import given, strategies as st

from girp.dataset import (
    ContributionMatrix,
    DatasetError,
    DuplicateRowId,
    FeatureKind,
    FeatureTable,
    NonFiniteValue,
    SchemaError,
    ShapeMismatch,
    UnknownLevel,
    MissingValue,
    load_dataset,
    load_features,
    split_dataset,
    write_contributions,
    write_features,
)

SCHEMA = {"x": {"kind": "ordinal"}, "flag": {"kind": "binary"},
          "color": {"kind": "categorical", "levels": ["red", "green", "blue"]}}


def _sources(features: str, contributions: str):
    return io.StringIO(features), io.StringIO(contributions)


def test_load_minimal_pair():
    features = "x,flag,color\n1.5,0,red\n2.5,1,blue\n0.25,0,green\n"
    contributions = ("x,flag,color,__predicted_score\n"
                     "0.1,0.2,0.3,1.0\n0.4,0.5,0.6,2.0\n0.7,0.8,0.9,3.0\n")
    table, contribs = load_dataset(*_sources(features, contributions), SCHEMA)
    assert table.n_rows == 3 and table.n_cols == 3
    assert contribs.n_rows == 3 and contribs.n_cols == 3
    assert table.values[1, 2] == 2.0  # blue -> code 2
    assert contribs.predicted_scores.tolist() == [1.0, 2.0, 3.0]
    assert table.row_ids == ("0", "1", "2")


def test_column_order_follows_schema():
    features = "flag,x,color\n0,1.5,red\n1,2.5,blue\n"
    contributions = ("flag,x,color,__predicted_score\n"
                     "0.2,0.1,0.3,1.0\n0.5,0.4,0.6,2.0\n")
    table, contribs = load_dataset(*_sources(features, contributions), SCHEMA)
    assert table.names == ("x", "flag", "color")
    assert table.values[0].tolist() == [1.5, 0.0, 0.0]
    assert contribs.values[0].tolist() == [0.1, 0.2, 0.3]


def test_shape_mismatch_between_files():
    features = "x,flag,color\n1.5,0,red\n"
    contributions = "x,flag,__predicted_score\n0.1,0.2,1.0\n"
    with pytest.raises(ShapeMismatch):
        load_dataset(*_sources(features, contributions), SCHEMA)


def test_nonfinite_contribution_reports_coordinates():
    features = "x,flag,color\n1.5,0,red\n2.5,1,blue\n"
    contributions = ("x,flag,color,__predicted_score\n"
                     "0.1,0.2,0.3,1.0\n0.4,inf,0.6,2.0\n")
    with pytest.raises(NonFiniteValue) as err:
        load_dataset(*_sources(features, contributions), SCHEMA)
    assert err.value.row == 1
    assert err.value.col == 1


def test_unknown_level_and_missing_value():
    bad_level = "x,flag,color\n1.5,0,purple\n"
    with pytest.raises(UnknownLevel) as err:
        load_features(io.StringIO(bad_level), SCHEMA)
    assert (err.value.row, err.value.col) == (0, 2)
    missing = "x,flag,color\n,0,red\n"
    with pytest.raises(MissingValue):
        load_features(io.StringIO(missing), SCHEMA)


def test_binary_value_rejected():
    features = "x,flag,color\n1.5,2,red\n"
    with pytest.raises(DatasetError):
        load_features(io.StringIO(features), SCHEMA)


def test_duplicate_row_id_rejected():
    features = "__row_id,x,flag,color\na,1.5,0,red\na,2.5,1,blue\n"
    with pytest.raises(DuplicateRowId):
        load_features(io.StringIO(features), SCHEMA)


def test_row_id_cross_check():
    features = "__row_id,x,flag,color\na,1.5,0,red\nb,2.5,1,blue\n"
    contributions = ("__row_id,x,flag,color,__predicted_score\n"
                     "a,0.1,0.2,0.3,1.0\nc,0.4,0.5,0.6,2.0\n")
    with pytest.raises(ShapeMismatch):
        load_dataset(*_sources(features, contributions), SCHEMA)


def test_label_column_loads():
    features = "x,flag,color\n1.5,0,red\n2.5,1,blue\n"
    contributions = ("x,flag,color,__predicted_score,__label\n"
                     "0.1,0.2,0.3,1.0,yes\n0.4,0.5,0.6,2.0,no\n")
    _, contribs = load_dataset(*_sources(features, contributions), SCHEMA)
    assert contribs.labels == ("yes", "no")


def test_schema_validation():
    with pytest.raises(SchemaError):
        FeatureKind.categorical(["one"])
    with pytest.raises(SchemaError):
        FeatureKind.categorical(["a", "a"])
    with pytest.raises(SchemaError):
        FeatureKind("weird")


def test_round_trip(tmp_path):
    rng = np.random.default_rng(3)
    kinds = (FeatureKind.ordinal(), FeatureKind.binary(),
             FeatureKind.categorical(["a", "b", "c"]))
    values = np.column_stack([rng.random(5), rng.integers(0, 2, 5),
                              rng.integers(0, 3, 5)]).astype(np.float64)
    table = FeatureTable(("x", "flag", "cat"), kinds, values,
                         tuple(f"r{i}" for i in range(5)))
    contribs = ContributionMatrix(rng.normal(size=(5, 3)), rng.normal(size=5),
                                  labels=("u", "v", "u", "v", "u"))
    fpath, cpath = tmp_path / "f.csv", tmp_path / "c.csv"
    write_features(table, fpath)
    write_contributions(contribs, table.names, cpath, row_ids=table.row_ids)
    schema = {"x": {"kind": "ordinal"}, "flag": {"kind": "binary"},
              "cat": {"kind": "categorical", "levels": ["a", "b", "c"]}}
    table2, contribs2 = load_dataset(fpath, cpath, schema)
    assert np.array_equal(table.values, table2.values)
    assert table.row_ids == table2.row_ids
    assert np.array_equal(contribs.values, contribs2.values)
    assert np.array_equal(contribs.predicted_scores, contribs2.predicted_scores)
    assert contribs.labels == contribs2.labels


def test_split_sizes_and_determinism():
    split = split_dataset(10, 0.2, seed=7)
    assert split.validation_indices.size == 2
    assert split.build_indices.size == 8
    again = split_dataset(10, 0.2, seed=7)
    assert np.array_equal(split.build_indices, again.build_indices)
    assert np.array_equal(split.validation_indices, again.validation_indices)


def test_split_two_rows():
    split = split_dataset(2, 0.5, seed=0)
    assert split.build_indices.size == 1
    assert split.validation_indices.size == 1


def test_split_rejects_bad_args():
    with pytest.raises(DatasetError):
        split_dataset(10, 0.0, seed=1)
    with pytest.raises(DatasetError):
        split_dataset(10, 1.0, seed=1)
    with pytest.raises(DatasetError):
        split_dataset(1, 0.5, seed=1)


@given(m=st.integers(2, 300), fraction=st.floats(0.01, 0.99), seed=st.integers(0, 2**31))
def test_split_partition_properties(m, fraction, seed):
    split = split_dataset(m, fraction, seed)
    build = set(split.build_indices.tolist())
    val = set(split.validation_indices.tolist())
    assert build | val == set(range(m))
    assert not build & val
    assert 1 <= len(val) <= m - 1


def test_nonfinite_matrix_rejected():
    values = np.array([[1.0, np.nan]])
    with pytest.raises(NonFiniteValue) as err:
        ContributionMatrix(values, np.array([0.0]))
    assert (err.value.row, err.value.col) == (0, 1)
