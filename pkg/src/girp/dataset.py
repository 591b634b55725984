"""Paired feature/contribution tables: loading, validation, and build/validation splitting.

The feature table holds raw input-variable values (binary, ordinal, or
categorical per column); the contribution matrix holds one real-valued
contribution per (sample, variable) plus a predicted score per sample.
Both are immutable after construction and shape-checked against each other.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

BINARY = "binary"
ORDINAL = "ordinal"
CATEGORICAL = "categorical"

ROW_ID_COLUMN = "__row_id"
PREDICTED_SCORE_COLUMN = "__predicted_score"
LABEL_COLUMN = "__label"


class DatasetError(ValueError):
    """Input data violates the dataset contract."""


class SchemaError(DatasetError):
    """Schema sidecar is malformed or inconsistent."""


class ShapeMismatch(DatasetError):
    """Feature and contribution sources disagree in shape or header order."""


class DuplicateRowId(DatasetError):
    """A row identifier occurs more than once."""


class CellError(DatasetError):
    """A single cell is invalid. Coordinates are 0-based data-row / file-column."""

    def __init__(self, message: str, row: int, col: int):
        super().__init__(f"{message} (row {row}, column {col})")
        self.row = row
        self.col = col


class NonFiniteValue(CellError):
    pass


class UnknownLevel(CellError):
    pass


class InvalidValue(CellError):
    pass


class MissingValue(CellError):
    pass


@dataclass(frozen=True)
class FeatureKind:
    """Column kind: binary (0/1), ordinal (numeric), or categorical over fixed levels."""

    kind: str
    levels: tuple[str, ...] = ()

    def __post_init__(self):
        if self.kind not in (BINARY, ORDINAL, CATEGORICAL):
            raise SchemaError(f"unknown feature kind {self.kind!r}")
        if self.kind == CATEGORICAL:
            if len(self.levels) < 2:
                raise SchemaError("categorical column needs at least 2 levels")
            if len(set(self.levels)) != len(self.levels):
                raise SchemaError("categorical levels must be distinct")
        elif self.levels:
            raise SchemaError(f"{self.kind} column does not take levels")

    @classmethod
    def binary(cls) -> "FeatureKind":
        return cls(BINARY)

    @classmethod
    def ordinal(cls) -> "FeatureKind":
        return cls(ORDINAL)

    @classmethod
    def categorical(cls, levels: Iterable[str]) -> "FeatureKind":
        return cls(CATEGORICAL, tuple(levels))

    @property
    def is_categorical(self) -> bool:
        return self.kind == CATEGORICAL

    def code_for(self, label: str) -> int | None:
        try:
            return self.levels.index(label)
        except ValueError:
            return None


@dataclass(frozen=True)
class FeatureTable:
    """M x N raw input values. Categorical cells store dense level codes as floats."""

    names: tuple[str, ...]
    kinds: tuple[FeatureKind, ...]
    values: np.ndarray
    row_ids: tuple[str, ...]

    def __post_init__(self):
        if len(self.names) != len(self.kinds):
            raise SchemaError("names and kinds length mismatch")
        if self.values.ndim != 2 or self.values.shape != (len(self.row_ids), len(self.names)):
            raise ShapeMismatch(
                f"feature values shape {self.values.shape} does not match "
                f"{len(self.row_ids)} rows x {len(self.names)} columns"
            )
        if self.n_rows < 1 or self.n_cols < 1:
            raise ShapeMismatch("feature table needs at least 1 row and 1 column")
        if len(set(self.row_ids)) != len(self.row_ids):
            raise DuplicateRowId("row ids are not unique")
        for j, kind in enumerate(self.kinds):
            col = self.values[:, j]
            if not np.all(np.isfinite(col)):
                row = int(np.flatnonzero(~np.isfinite(col))[0])
                raise NonFiniteValue("non-finite feature value", row, j)
            if kind.kind == BINARY:
                bad = (col != 0.0) & (col != 1.0)
                if bad.any():
                    raise InvalidValue("binary value is not 0 or 1", int(np.flatnonzero(bad)[0]), j)
            elif kind.kind == CATEGORICAL:
                bad = (col != np.floor(col)) | (col < 0) | (col >= len(kind.levels))
                if bad.any():
                    raise UnknownLevel("level code out of range", int(np.flatnonzero(bad)[0]), j)
        self.values.setflags(write=False)

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    @property
    def n_cols(self) -> int:
        return self.values.shape[1]

    def column(self, j: int) -> np.ndarray:
        return self.values[:, j]

    def decode(self, j: int, value: float):
        """Raw cell value for export: 0/1 int, float, or categorical label."""
        kind = self.kinds[j]
        if kind.kind == BINARY:
            return int(value)
        if kind.kind == CATEGORICAL:
            return kind.levels[int(value)]
        return float(value)


@dataclass(frozen=True)
class ContributionMatrix:
    """Per-sample, per-variable contributions plus predicted scores, all finite."""

    values: np.ndarray
    predicted_scores: np.ndarray
    labels: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.values.ndim != 2:
            raise ShapeMismatch("contributions must be a 2-d matrix")
        if self.predicted_scores.shape != (self.values.shape[0],):
            raise ShapeMismatch("predicted_scores length does not match contribution rows")
        if not np.all(np.isfinite(self.values)):
            row, col = map(int, np.argwhere(~np.isfinite(self.values))[0])
            raise NonFiniteValue("non-finite contribution", row, col)
        if not np.all(np.isfinite(self.predicted_scores)):
            row = int(np.flatnonzero(~np.isfinite(self.predicted_scores))[0])
            raise NonFiniteValue("non-finite predicted score", row, self.values.shape[1])
        if self.labels is not None and len(self.labels) != self.values.shape[0]:
            raise ShapeMismatch("labels length does not match contribution rows")
        self.values.setflags(write=False)
        self.predicted_scores.setflags(write=False)

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    @property
    def n_cols(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class DatasetSplit:
    """Disjoint, exhaustive build/validation row partition, pure in (M, fraction, seed)."""

    build_indices: np.ndarray
    validation_indices: np.ndarray
    seed: int
    validation_fraction: float


def split_dataset(m: int, validation_fraction: float, seed: int) -> DatasetSplit:
    """Deterministically partition row indices 0..M-1 into build and validation sets.

    The validation set has round(M * fraction) rows, clamped to [1, M-1].
    """
    if not 0.0 < validation_fraction < 1.0:
        raise DatasetError(f"validation_fraction must be in (0, 1), got {validation_fraction}")
    if m < 2:
        raise DatasetError(f"need at least 2 rows to split, got {m}")
    n_val = int(round(m * validation_fraction))
    n_val = min(max(n_val, 1), m - 1)
    perm = np.random.default_rng(seed).permutation(m)
    validation = np.sort(perm[:n_val])
    build = np.sort(perm[n_val:])
    return DatasetSplit(build, validation, seed, validation_fraction)


def load_schema(source) -> list[tuple[str, FeatureKind]]:
    """Read the JSON schema sidecar: {column: {"kind": ..., "levels": [...]?}}.

    Column order follows the JSON object order.
    """
    if isinstance(source, (str, Path)):
        with open(source, encoding="utf-8") as fh:
            raw = json.load(fh)
    elif isinstance(source, dict):
        raw = source
    else:
        raw = json.load(source)
    if not isinstance(raw, dict) or not raw:
        raise SchemaError("schema must be a non-empty JSON object")
    columns = []
    for name, spec in raw.items():
        if not isinstance(spec, dict) or "kind" not in spec:
            raise SchemaError(f"schema entry for {name!r} needs a 'kind'")
        kind = spec["kind"]
        if kind == CATEGORICAL:
            if "levels" not in spec:
                raise SchemaError(f"categorical column {name!r} needs 'levels'")
            columns.append((name, FeatureKind.categorical(spec["levels"])))
        else:
            if spec.get("levels"):
                raise SchemaError(f"{kind} column {name!r} does not take levels")
            columns.append((name, FeatureKind(kind)))
    return columns


def schema_to_dict(names: Iterable[str], kinds: Iterable[FeatureKind]) -> dict:
    out = {}
    for name, kind in zip(names, kinds):
        if kind.is_categorical:
            out[name] = {"kind": kind.kind, "levels": list(kind.levels)}
        else:
            out[name] = {"kind": kind.kind}
    return out


def _read_csv(source) -> list[list[str]]:
    if isinstance(source, (str, Path)):
        with open(source, newline="", encoding="utf-8") as fh:
            return list(csv.reader(fh))
    return list(csv.reader(source))


def _parse_numeric(text: str, kind: FeatureKind, row: int, col: int) -> float:
    if text == "":
        raise MissingValue("missing value", row, col)
    try:
        x = float(text)
    except ValueError:
        raise InvalidValue(f"not a number: {text!r}", row, col) from None
    if not math.isfinite(x):
        raise NonFiniteValue(f"non-finite value {text!r}", row, col)
    if kind.kind == BINARY and x not in (0.0, 1.0):
        raise InvalidValue(f"binary value must be 0 or 1, got {text!r}", row, col)
    return x


def _parse_cell(text: str, kind: FeatureKind, row: int, col: int) -> float:
    if kind.kind == CATEGORICAL:
        if text == "":
            raise MissingValue("missing value", row, col)
        code = kind.code_for(text)
        if code is None:
            raise UnknownLevel(f"unknown categorical level {text!r}", row, col)
        return float(code)
    return _parse_numeric(text, kind, row, col)


def load_features(source, schema) -> FeatureTable:
    """Load and validate a features CSV against the schema sidecar."""
    table, _ = _load_features_with_order(source, schema)
    return table


def _load_features_with_order(source, schema) -> tuple[FeatureTable, list[str]]:
    columns = load_schema(schema) if not isinstance(schema, list) else schema
    rows = _read_csv(source)
    if not rows:
        raise ShapeMismatch("features file is empty")
    header, data = rows[0], rows[1:]
    if not data:
        raise ShapeMismatch("features file has no data rows")

    names = [name for name, _ in columns]
    kind_by_name = dict(columns)
    id_col = header.index(ROW_ID_COLUMN) if ROW_ID_COLUMN in header else None
    feature_header = [h for h in header if h != ROW_ID_COLUMN]
    if sorted(feature_header) != sorted(names):
        raise ShapeMismatch(
            f"features header {feature_header} does not match schema columns {names}"
        )
    col_pos = {name: header.index(name) for name in names}

    m = len(data)
    values = np.empty((m, len(names)), dtype=np.float64)
    row_ids: list[str] = []
    seen = set()
    for r, record in enumerate(data):
        if len(record) != len(header):
            raise ShapeMismatch(f"row {r} has {len(record)} fields, header has {len(header)}")
        if id_col is not None:
            rid = record[id_col]
            if rid in seen:
                raise DuplicateRowId(f"duplicate row id {rid!r} at row {r}")
            seen.add(rid)
            row_ids.append(rid)
        for j, name in enumerate(names):
            values[r, j] = _parse_cell(record[col_pos[name]], kind_by_name[name], r, col_pos[name])
    if id_col is None:
        row_ids = [str(i) for i in range(m)]
    table = FeatureTable(tuple(names), tuple(k for _, k in columns), values, tuple(row_ids))
    return table, feature_header


def load_dataset(feature_source, contribution_source, schema) -> tuple[FeatureTable, ContributionMatrix]:
    """Load a validated, shape-consistent feature table / contribution matrix pair.

    The contributions CSV must repeat the features header order (row-id column
    aside), followed by a trailing `__predicted_score` column and an optional
    `__label` column. Rows pair by order; row ids are cross-checked when both
    files carry them.
    """
    columns = load_schema(schema)
    table, feature_order = _load_features_with_order(feature_source, columns)
    names = list(table.names)

    rows = _read_csv(contribution_source)
    if not rows:
        raise ShapeMismatch("contributions file is empty")
    header, data = rows[0], rows[1:]
    id_col = header.index(ROW_ID_COLUMN) if ROW_ID_COLUMN in header else None
    plain = [h for h in header if h != ROW_ID_COLUMN]
    has_label = plain and plain[-1] == LABEL_COLUMN
    if has_label:
        plain = plain[:-1]
    if not plain or plain[-1] != PREDICTED_SCORE_COLUMN:
        raise ShapeMismatch(f"contributions header must end with {PREDICTED_SCORE_COLUMN}")
    if plain[:-1] != feature_order:
        raise ShapeMismatch(
            f"contribution columns {plain[:-1]} do not repeat the features "
            f"header order {feature_order}"
        )
    if len(data) != table.n_rows:
        raise ShapeMismatch(
            f"contributions have {len(data)} rows, features have {table.n_rows}"
        )

    col_pos = {name: header.index(name) for name in names}
    score_pos = header.index(PREDICTED_SCORE_COLUMN)
    label_pos = header.index(LABEL_COLUMN) if has_label else None
    ordinal = FeatureKind.ordinal()

    values = np.empty((len(data), len(names)), dtype=np.float64)
    scores = np.empty(len(data), dtype=np.float64)
    labels: list[str] = []
    for r, record in enumerate(data):
        if len(record) != len(header):
            raise ShapeMismatch(f"contributions row {r} has {len(record)} fields")
        if id_col is not None and record[id_col] != table.row_ids[r]:
            raise ShapeMismatch(
                f"row id mismatch at row {r}: features {table.row_ids[r]!r}, "
                f"contributions {record[id_col]!r}"
            )
        for j, name in enumerate(names):
            values[r, j] = _parse_numeric(record[col_pos[name]], ordinal, r, col_pos[name])
        scores[r] = _parse_numeric(record[score_pos], ordinal, r, score_pos)
        if label_pos is not None:
            labels.append(record[label_pos])
    contribs = ContributionMatrix(values, scores, tuple(labels) if has_label else None)
    return table, contribs


def write_features(table: FeatureTable, path) -> None:
    """Write a features CSV that round-trips through load_features."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow([ROW_ID_COLUMN, *table.names])
        for r in range(table.n_rows):
            w.writerow([table.row_ids[r]] + [_cell_text(table.decode(j, table.values[r, j]))
                                             for j in range(table.n_cols)])


def write_contributions(contribs: ContributionMatrix, names: Iterable[str], path,
                        row_ids: Iterable[str] | None = None) -> None:
    """Write a contributions CSV compatible with load_dataset."""
    names = list(names)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        header = list(names) + [PREDICTED_SCORE_COLUMN]
        if contribs.labels is not None:
            header.append(LABEL_COLUMN)
        ids = list(row_ids) if row_ids is not None else None
        if ids is not None:
            header = [ROW_ID_COLUMN] + header
        w.writerow(header)
        for r in range(contribs.n_rows):
            row = [repr(float(x)) for x in contribs.values[r]]
            row.append(repr(float(contribs.predicted_scores[r])))
            if contribs.labels is not None:
                row.append(contribs.labels[r])
            if ids is not None:
                row = [ids[r]] + row
            w.writerow(row)


def _cell_text(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, int):
        return str(value)
    return repr(value)
