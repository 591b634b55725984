"""Shared fixture builders for the test suite."""

from __future__ import annotations

import numpy as np

from girp.dataset import ContributionMatrix, FeatureKind, FeatureTable
from girp.grow import GrowParams, grow_tree


def mixed_kinds(rng: np.random.Generator, n_cols: int) -> list[FeatureKind]:
    kinds = []
    for _ in range(n_cols):
        roll = rng.integers(0, 3)
        if roll == 0:
            kinds.append(FeatureKind.binary())
        elif roll == 1:
            kinds.append(FeatureKind.ordinal())
        else:
            n_levels = int(rng.integers(3, 6))
            kinds.append(FeatureKind.categorical([f"L{i}" for i in range(n_levels)]))
    return kinds


def random_dataset(rng: np.random.Generator, m: int, n_cols: int,
                   kinds: list[FeatureKind] | None = None,
                   coarse_values: bool = False):
    """Random features of mixed kinds with iid normal contributions.

    coarse_values snaps ordinal columns to a small grid so ties and duplicate
    values get exercised.
    """
    if kinds is None:
        kinds = mixed_kinds(rng, n_cols)
    values = np.empty((m, n_cols), dtype=np.float64)
    for j, kind in enumerate(kinds):
        if kind.kind == "binary":
            values[:, j] = rng.integers(0, 2, size=m)
        elif kind.kind == "categorical":
            values[:, j] = rng.integers(0, len(kind.levels), size=m)
        elif coarse_values:
            values[:, j] = rng.integers(0, 5, size=m) / 4.0
        else:
            values[:, j] = rng.random(m)
    table = FeatureTable(tuple(f"x{j}" for j in range(n_cols)), tuple(kinds),
                         values, tuple(str(i) for i in range(m)))
    contribs = rng.normal(size=(m, n_cols))
    matrix = ContributionMatrix(contribs, contribs.sum(axis=1))
    return table, matrix


def small_random_tree(rng: np.random.Generator, max_internal: int = 12):
    """Grow a random tree with at most max_internal internal nodes."""
    while True:
        m = int(rng.integers(30, 90))
        table, contribs = random_dataset(rng, m, int(rng.integers(2, 5)))
        params = GrowParams(max_depth=int(rng.integers(2, 4)),
                            min_node_size=int(rng.integers(3, 8)),
                            validation_fraction=0.25, seed=0)
        root = grow_tree(table, contribs, np.arange(m), params)
        n_internal = sum(1 for _ in _internals(root))
        if 1 <= n_internal <= max_internal:
            return root, table, contribs, params


def _internals(node):
    if node.split is not None:
        yield node
        yield from _internals(node.left)
        yield from _internals(node.right)
