"""Candidate split enumeration and strength scoring.

A split over variable i partitions a sample subset by that variable's raw
values; its strength is the difference in mean contribution of variable i
between the two sides (predicate-false side minus predicate-true side).
Samples satisfying the predicate go right.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .dataset import BINARY, ORDINAL, ContributionMatrix, FeatureTable

IS_ONE = "is_one"
LESS_THAN = "less_than"
IN_SUBSET = "in_subset"


class EmptyChild(ValueError):
    """The predicate sends every sample of the subset to one side."""


@dataclass(frozen=True)
class Split:
    """One predicate over one column. threshold is set for less_than,
    subset (sorted level codes) for in_subset."""

    var_index: int
    kind: str
    threshold: float | None = None
    subset: tuple[int, ...] | None = None

    def goes_right(self, value: float) -> bool:
        if self.kind == IS_ONE:
            return value == 1.0
        if self.kind == LESS_THAN:
            return value < self.threshold
        return int(value) in self.subset

    def right_mask(self, column: np.ndarray) -> np.ndarray:
        if self.kind == IS_ONE:
            return column == 1.0
        if self.kind == LESS_THAN:
            return column < self.threshold
        return np.isin(column, self.subset)


@dataclass(frozen=True)
class ScoredSplit:
    split: Split
    g_value: float
    left_mean: float
    right_mean: float
    left_count: int
    right_count: int

    @property
    def abs_g(self) -> float:
        return abs(self.g_value)


def midpoints(sorted_distinct: np.ndarray) -> list[float]:
    """Thresholds between consecutive distinct values. Falls back to the upper
    value when the float midpoint rounds down onto the lower one."""
    out = []
    for a, b in zip(sorted_distinct[:-1], sorted_distinct[1:]):
        d = (float(a) + float(b)) / 2.0
        if d <= a:
            d = float(b)
        out.append(d)
    return out


def canonical_subsets(present_codes: list[int]) -> list[tuple[int, ...]]:
    """All nontrivial level subsets up to complement; the canonical member
    contains the lowest present code."""
    lowest, others = present_codes[0], present_codes[1:]
    out = []
    full = (1 << len(others)) - 1
    for mask in range(full):
        subset = [lowest] + [c for k, c in enumerate(others) if mask >> k & 1]
        out.append(tuple(subset))
    return out


def ordered_subsets(present_codes: list[int], means: list[float]) -> list[tuple[int, ...]]:
    """CART-style reduction: sort levels by mean contribution (ties by code)
    and cut the order at every position."""
    order = sorted(present_codes, key=lambda c: (means[present_codes.index(c)], c))
    return [tuple(sorted(order[:m])) for m in range(1, len(order))]


def enumerate_splits(column: int, subset_indices: np.ndarray, table: FeatureTable,
                     max_categorical_exhaustive: int = 8,
                     contributions: ContributionMatrix | None = None) -> list[Split]:
    """Candidate splits for one column over a sample subset.

    Binary columns yield the single is-one split when both values occur.
    Ordinal columns yield one less-than split per midpoint of consecutive
    distinct values. Categorical columns with at most max_categorical_exhaustive
    present levels yield every canonical subset split; above that, the levels
    are ordered by mean contribution (requires `contributions`) and cut L-1 ways.
    """
    subset_indices = np.sort(np.asarray(subset_indices))
    values = table.values[subset_indices, column]
    kind = table.kinds[column]
    if kind.kind == BINARY:
        has0 = np.any(values == 0.0)
        has1 = np.any(values == 1.0)
        return [Split(column, IS_ONE)] if has0 and has1 else []
    if kind.kind == ORDINAL:
        distinct = np.unique(values)
        return [Split(column, LESS_THAN, threshold=d) for d in midpoints(distinct)]
    codes = np.unique(values).astype(int).tolist()
    if len(codes) < 2:
        return []
    if len(codes) <= max_categorical_exhaustive:
        subsets = canonical_subsets(codes)
    else:
        if contributions is None:
            raise ValueError(
                "categorical column exceeds max_categorical_exhaustive; "
                "mean-contribution ordering needs the contribution matrix"
            )
        c = contributions.values[subset_indices, column]
        means = [float(np.mean(c[values == code])) for code in codes]
        subsets = ordered_subsets(codes, means)
    return [Split(column, IN_SUBSET, subset=s) for s in subsets]


def split_strength(split: Split, subset_indices: np.ndarray, table: FeatureTable,
                   contributions: ContributionMatrix) -> ScoredSplit:
    """Score a split: mean contribution of the split variable on the left
    (predicate false) minus the right (predicate true). Means are taken in
    ascending sample-index order."""
    subset_indices = np.sort(np.asarray(subset_indices))
    column = table.values[subset_indices, split.var_index]
    c = contributions.values[subset_indices, split.var_index]
    right = split.right_mask(column)
    right_c = c[right]
    left_c = c[~right]
    if right_c.size == 0 or left_c.size == 0:
        raise EmptyChild(f"split {split} does not separate the subset")
    left_mean = float(np.mean(left_c))
    right_mean = float(np.mean(right_c))
    return ScoredSplit(split, left_mean - right_mean, left_mean, right_mean,
                       int(left_c.size), int(right_c.size))


def _tie_key(split: Split):
    if split.kind == LESS_THAN:
        return split.threshold
    if split.kind == IN_SUBSET:
        return split.subset
    return ()


def _best_ordinal(column: int, values: np.ndarray, c: np.ndarray, min_node_size: int):
    order = np.argsort(values, kind="stable")
    sv = values[order]
    sc = c[order]
    n = sv.size
    boundaries = np.flatnonzero(sv[:-1] != sv[1:])
    if boundaries.size == 0:
        return None
    csum = np.cumsum(sc)
    total = csum[-1]
    n_right = boundaries + 1
    n_left = n - n_right
    ok = (n_right >= min_node_size) & (n_left >= min_node_size)
    if not ok.any():
        return None
    g = (total - csum[boundaries]) / n_left - csum[boundaries] / n_right
    abs_g = np.where(ok, np.abs(g), -np.inf)
    best = int(np.argmax(abs_g))
    b = int(boundaries[best])
    d = (float(sv[b]) + float(sv[b + 1])) / 2.0
    if d <= sv[b]:
        d = float(sv[b + 1])
    return float(abs_g[best]), Split(column, LESS_THAN, threshold=d)


def _best_binary(column: int, values: np.ndarray, c: np.ndarray, min_node_size: int):
    right = values == 1.0
    n_right = int(right.sum())
    n_left = values.size - n_right
    if n_right < min_node_size or n_left < min_node_size:
        return None
    g = float(np.mean(c[~right])) - float(np.mean(c[right]))
    return abs(g), Split(column, IS_ONE)


def _best_categorical(column: int, values: np.ndarray, c: np.ndarray, min_node_size: int,
                      n_levels: int, max_exhaustive: int):
    codes = values.astype(np.int64)
    counts = np.bincount(codes, minlength=n_levels)
    sums = np.bincount(codes, weights=c, minlength=n_levels)
    present = np.flatnonzero(counts).tolist()
    if len(present) < 2:
        return None
    if len(present) <= max_exhaustive:
        subsets = canonical_subsets(present)
    else:
        means = [float(sums[code] / counts[code]) for code in present]
        subsets = ordered_subsets(present, means)
    n = values.size
    total = float(sums.sum())
    best = None
    for subset in subsets:
        idx = list(subset)
        n_right = int(counts[idx].sum())
        n_left = n - n_right
        if n_right < min_node_size or n_left < min_node_size:
            continue
        sum_right = float(sums[idx].sum())
        g = (total - sum_right) / n_left - sum_right / n_right
        key = abs(g)
        if best is None or key > best[0] or (key == best[0] and subset < best[1].subset):
            best = (key, Split(column, IN_SUBSET, subset=subset))
    return best


def _column_best(column: int, subset_indices: np.ndarray, table: FeatureTable,
                 contributions: ContributionMatrix, min_node_size: int,
                 max_categorical_exhaustive: int):
    values = table.values[subset_indices, column]
    c = contributions.values[subset_indices, column]
    kind = table.kinds[column]
    if kind.kind == BINARY:
        return _best_binary(column, values, c, min_node_size)
    if kind.kind == ORDINAL:
        return _best_ordinal(column, values, c, min_node_size)
    return _best_categorical(column, values, c, min_node_size,
                             len(kind.levels), max_categorical_exhaustive)


def best_split(subset_indices: np.ndarray, table: FeatureTable,
               contributions: ContributionMatrix, *, min_node_size: int = 1,
               max_categorical_exhaustive: int = 8,
               workers: int = 1) -> ScoredSplit | None:
    """The admissible split maximizing |strength| over all columns.

    Ties break toward the lower column index, then the smaller threshold or
    lexicographically smaller subset. Returns None when the subset is smaller
    than 2 * min_node_size, no admissible split exists, or the best strength
    is exactly zero.

    Candidate scoring is vectorized per column; the winner is re-scored with
    split_strength so the reported numbers follow its summation contract.
    Worker count never changes the result: per-column scoring is independent
    and the cross-column reduction is ordered.
    """
    subset_indices = np.sort(np.asarray(subset_indices))
    if subset_indices.size < 2 * min_node_size:
        return None
    columns = range(table.n_cols)

    def score(j):
        return _column_best(j, subset_indices, table, contributions,
                            min_node_size, max_categorical_exhaustive)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(score, columns))
    else:
        results = [score(j) for j in columns]

    best = None
    for result in results:
        if result is None:
            continue
        if best is None or result[0] > best[0]:
            best = result
    if best is None or best[0] == 0.0:
        return None
    scored = split_strength(best[1], subset_indices, table, contributions)
    if scored.g_value == 0.0:
        return None
    return scored
