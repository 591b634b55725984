"""Validation-based size selection over the pruned tree sequence.

Held-out samples are routed through the tree by its split predicates on raw
feature values. Each internal node scores the sign of its training strength
times the validation-side mean-contribution difference; a tree's validation
score is the sum over its internal nodes, and the tree maximizing it wins
(ties go to the smaller tree).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grow import TreeNode, internal_nodes
from .prune import PruneSequence


@dataclass(frozen=True)
class TreeScore:
    k: int
    internal_count: int
    g_validation: float


@dataclass(frozen=True)
class SelectionReport:
    per_tree: tuple[TreeScore, ...]
    chosen_k: int
    chosen_lambda: float

    @property
    def chosen_score(self) -> float:
        return self.per_tree[self.chosen_k].g_validation


def route(sample_row: np.ndarray, root: TreeNode,
          active: frozenset[int] | None = None) -> tuple[int, tuple[int, ...]]:
    """Descend one sample: predicate true goes right. Returns the leaf id and
    the internal node ids along the path."""
    node = root
    path: list[int] = []
    while node.split is not None and (active is None or node.node_id in active):
        path.append(node.node_id)
        value = float(sample_row[node.split.split.var_index])
        node = node.right if node.split.split.goes_right(value) else node.left
    return node.node_id, tuple(path)


def node_validation_strengths(root: TreeNode, features: np.ndarray,
                              contributions: np.ndarray,
                              active: frozenset[int] | None = None) -> dict[int, float]:
    """Validation strength for every internal node of the (active) tree.

    A node with no validation samples on one side scores 0.
    """
    strengths: dict[int, float] = {}

    def visit(node: TreeNode, idx: np.ndarray):
        if node.split is None or (active is not None and node.node_id not in active):
            return
        split = node.split.split
        right = split.right_mask(features[idx, split.var_index])
        left_idx = idx[~right]
        right_idx = idx[right]
        if left_idx.size == 0 or right_idx.size == 0:
            strengths[node.node_id] = 0.0
        else:
            diff = (float(np.mean(contributions[left_idx, split.var_index]))
                    - float(np.mean(contributions[right_idx, split.var_index])))
            strengths[node.node_id] = math.copysign(1.0, node.split.g_value) * diff \
                if node.split.g_value != 0.0 else 0.0
        visit(node.left, left_idx)
        visit(node.right, right_idx)

    visit(root, np.arange(features.shape[0]))
    return strengths


def validation_node_strength(root: TreeNode, node_id: int, features: np.ndarray,
                             contributions: np.ndarray,
                             active: frozenset[int] | None = None) -> float:
    """Validation strength of one internal node (see node_validation_strengths)."""
    strengths = node_validation_strengths(root, features, contributions, active)
    if node_id not in strengths:
        raise KeyError(f"node {node_id} is not internal in the active tree")
    return strengths[node_id]


def tree_validation_score(root: TreeNode, strengths: dict[int, float],
                          active: frozenset[int] | None = None) -> float:
    """Sum of node validation strengths over the active tree, in preorder."""
    return sum(strengths[n.node_id] for n in internal_nodes(root, active))


def select_best(seq: PruneSequence, validation_features: np.ndarray,
                validation_contributions: np.ndarray) -> SelectionReport:
    """Score every tree in the sequence on the validation data and pick the
    best; equal scores prefer the smaller tree (larger k)."""
    strengths = node_validation_strengths(seq.root, validation_features,
                                          validation_contributions)
    per_tree = []
    chosen_k = 0
    best_score = -math.inf
    for k, active in enumerate(seq.active_sets):
        score = tree_validation_score(seq.root, strengths, active)
        per_tree.append(TreeScore(k, len(active), score))
        if score >= best_score:
            best_score = score
            chosen_k = k
    return SelectionReport(tuple(per_tree), chosen_k, seq.lambda_for(chosen_k))
