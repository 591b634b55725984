"""Greedy recursive partitioning into the large initial tree."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .dataset import ContributionMatrix, FeatureTable
from .splits import ScoredSplit, best_split


class InvariantError(RuntimeError):
    """A structural invariant of a grown or pruned tree does not hold."""


@dataclass(frozen=True)
class GrowParams:
    """Pipeline hyperparameters. max_depth counts edges from the root
    (root at depth 0); min_node_size applies to both children of any split."""

    max_depth: int = 100
    min_node_size: int = 20
    max_categorical_exhaustive: int = 8
    validation_fraction: float = 0.25
    seed: int = 42

    def __post_init__(self):
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")
        if self.min_node_size < 1:
            raise ValueError("min_node_size must be >= 1")
        if self.max_categorical_exhaustive < 1:
            raise ValueError("max_categorical_exhaustive must be >= 1")
        if not 0.0 < self.validation_fraction < 1.0:
            raise ValueError("validation_fraction must be in (0, 1)")


@dataclass(frozen=True)
class NodeStats:
    n: int
    mean_predicted_score: float
    accuracy: float | None = None


@dataclass
class TreeNode:
    """Binary tree node. Leaves have split None; internal nodes carry the
    chosen ScoredSplit plus both children. node_ids are preorder."""

    node_id: int
    depth: int
    sample_indices: np.ndarray | None
    stats: NodeStats
    split: ScoredSplit | None = None
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None

    @property
    def is_leaf(self) -> bool:
        return self.split is None


def iter_nodes(root: TreeNode, active: frozenset[int] | set[int] | None = None) -> Iterator[TreeNode]:
    """Preorder traversal. When `active` is given, internal nodes outside it
    are treated as leaves (their subtrees are not visited)."""
    stack = [root]
    while stack:
        node = stack.pop()
        yield node
        if node.split is not None and (active is None or node.node_id in active):
            stack.append(node.right)
            stack.append(node.left)


def internal_nodes(root: TreeNode, active=None) -> list[TreeNode]:
    return [n for n in iter_nodes(root, active)
            if n.split is not None and (active is None or n.node_id in active)]


def find_node(root: TreeNode, node_id: int) -> TreeNode:
    for node in iter_nodes(root):
        if node.node_id == node_id:
            return node
    raise KeyError(f"no node with id {node_id}")


def _node_stats(indices: np.ndarray, contributions: ContributionMatrix,
                positive_label: str | None) -> NodeStats:
    mean_score = float(np.mean(contributions.predicted_scores[indices]))
    accuracy = None
    if positive_label is not None and contributions.labels is not None:
        labels = np.asarray(contributions.labels, dtype=object)[indices]
        accuracy = float(np.mean(labels == positive_label))
    return NodeStats(int(indices.size), mean_score, accuracy)


def grow_tree(table: FeatureTable, contributions: ContributionMatrix,
              build_indices: np.ndarray, params: GrowParams, *,
              positive_label: str | None = None, workers: int = 1) -> TreeNode:
    """Grow the full initial tree over the build partition.

    At each node the best admissible split is applied; recursion stops at
    max_depth, when the subset cannot host two min_node_size children, or when
    no split has positive strength. Output is deterministic for fixed inputs
    regardless of worker count.
    """
    build_indices = np.sort(np.asarray(build_indices))
    if build_indices.size < 1:
        raise ValueError("build partition is empty")
    counter = [0]

    def recurse(indices: np.ndarray, depth: int) -> TreeNode:
        node = TreeNode(counter[0], depth, indices,
                        _node_stats(indices, contributions, positive_label))
        counter[0] += 1
        if depth >= params.max_depth or indices.size < 2 * params.min_node_size:
            return node
        scored = best_split(indices, table, contributions,
                            min_node_size=params.min_node_size,
                            max_categorical_exhaustive=params.max_categorical_exhaustive,
                            workers=workers)
        if scored is None:
            return node
        right = scored.split.right_mask(table.values[indices, scored.split.var_index])
        node.split = scored
        node.left = recurse(indices[~right], depth + 1)
        node.right = recurse(indices[right], depth + 1)
        return node

    return recurse(build_indices, 0)


def validate_tree(root: TreeNode, table: FeatureTable, params: GrowParams) -> None:
    """Check structural invariants of a grown tree; raises InvariantError."""
    expected_id = [0]

    def visit(node: TreeNode, depth: int):
        if node.node_id != expected_id[0]:
            raise InvariantError(f"node ids are not preorder at {node.node_id}")
        expected_id[0] += 1
        if node.depth != depth:
            raise InvariantError(f"node {node.node_id} depth {node.depth} != {depth}")
        if depth > params.max_depth:
            raise InvariantError(f"node {node.node_id} exceeds max depth")
        if node.stats.n < 1 or (node.sample_indices is not None
                                and node.sample_indices.size != node.stats.n):
            raise InvariantError(f"node {node.node_id} sample count mismatch")
        if node.stats.n < params.min_node_size and node.node_id != 0:
            raise InvariantError(f"node {node.node_id} smaller than min_node_size")
        if node.split is None:
            return
        if node.split.g_value == 0.0:
            raise InvariantError(f"internal node {node.node_id} has zero strength")
        if node.left is None or node.right is None:
            raise InvariantError(f"internal node {node.node_id} is missing children")
        if node.sample_indices is not None:
            col = table.values[node.sample_indices, node.split.split.var_index]
            right = node.split.split.right_mask(col)
            if not np.array_equal(node.sample_indices[right], node.right.sample_indices):
                raise InvariantError(f"node {node.node_id} right child partition mismatch")
            if not np.array_equal(node.sample_indices[~right], node.left.sample_indices):
                raise InvariantError(f"node {node.node_id} left child partition mismatch")
        if node.stats.n != node.left.stats.n + node.right.stats.n:
            raise InvariantError(f"node {node.node_id} child counts do not sum")
        visit(node.left, depth + 1)
        visit(node.right, depth + 1)

    visit(root, 0)
