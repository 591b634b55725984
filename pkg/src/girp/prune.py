"""Weakest-link pruning: the nested tree sequence and its complexity thresholds.

Each step collapses every internal node whose subtree has the minimum average
split strength (total |strength| over the subtree's internal nodes divided by
their count), recording that minimum as the step's threshold. Pruned trees are
stored as sets of surviving internal node ids over the original tree.
"""

from __future__ import annotations

from dataclasses import dataclass

from .grow import InvariantError, TreeNode, internal_nodes, iter_nodes


class NotInternal(ValueError):
    """The node is a leaf (or pruned to one), so it has no subtree strength."""


@dataclass(frozen=True)
class PruneSequence:
    """Nested trees T_0 (full) .. T_K (root leaf) as active internal-id sets.

    lambdas[k-1] is the threshold at which trees[k] was formed; the full tree
    corresponds to threshold 0.
    """

    root: TreeNode
    active_sets: tuple[frozenset[int], ...]
    lambdas: tuple[float, ...]
    collapsed_at_step: tuple[frozenset[int], ...]

    def __len__(self) -> int:
        return len(self.active_sets)

    def lambda_for(self, k: int) -> float:
        return 0.0 if k == 0 else self.lambdas[k - 1]


def total_strength(root: TreeNode, active: frozenset[int] | None = None) -> float:
    """Sum of |strength| over internal nodes, in preorder."""
    return sum(abs(n.split.g_value) for n in internal_nodes(root, active))


def penalized_strength(root: TreeNode, lam: float,
                       active: frozenset[int] | None = None) -> float:
    """Total strength minus lam per internal node."""
    if lam < 0:
        raise ValueError("penalty must be nonnegative")
    return total_strength(root, active) - lam * len(internal_nodes(root, active))


def avg_subtree_strength(root: TreeNode, node_id: int,
                         active: frozenset[int] | None = None) -> float:
    """Average |strength| over the internal nodes of the subtree rooted at node_id."""
    node = _find_active(root, node_id, active)
    nodes = internal_nodes(node, active)
    if not nodes:
        raise NotInternal(f"node {node_id} is not an internal node")
    return total_strength(node, active) / len(nodes)


def _find_active(root: TreeNode, node_id: int, active) -> TreeNode:
    for node in iter_nodes(root, active):
        if node.node_id == node_id:
            return node
    raise KeyError(f"no node with id {node_id} in the active tree")


def prune_sequence(root: TreeNode) -> PruneSequence:
    """Build the nested pruned sequence by iterative weakest-link collapse.

    Tied minimizers collapse in the same step; a minimizer inside another
    minimizer's subtree is subsumed by it.
    """
    parents: dict[int, int] = {}
    node_by_id: dict[int, TreeNode] = {}
    for node in iter_nodes(root):
        node_by_id[node.node_id] = node
        if node.split is not None:
            parents[node.left.node_id] = node.node_id
            parents[node.right.node_id] = node.node_id

    active = {n.node_id for n in internal_nodes(root)}
    active_sets = [frozenset(active)]
    lambdas: list[float] = []
    collapsed: list[frozenset[int]] = []

    while active:
        averages = _active_averages(root, active)
        minimum = min(averages.values())
        minimizers = sorted(t for t, avg in averages.items() if avg == minimum)
        roots = [t for t in minimizers
                 if not _has_ancestor_in(t, set(minimizers), parents)]
        for t in roots:
            _collapse(node_by_id[t], active)
        lambdas.append(minimum)
        collapsed.append(frozenset(roots))
        active_sets.append(frozenset(active))

    return PruneSequence(root, tuple(active_sets), tuple(lambdas), tuple(collapsed))


def _active_averages(root: TreeNode, active: set[int]) -> dict[int, float]:
    averages: dict[int, float] = {}

    def visit(node: TreeNode) -> tuple[float, int]:
        if node.split is None or node.node_id not in active:
            return 0.0, 0
        ls, lc = visit(node.left)
        rs, rc = visit(node.right)
        strength = abs(node.split.g_value) + ls + rs
        count = 1 + lc + rc
        averages[node.node_id] = strength / count
        return strength, count

    visit(root)
    return averages


def _has_ancestor_in(node_id: int, ids: set[int], parents: dict[int, int]) -> bool:
    cur = parents.get(node_id)
    while cur is not None:
        if cur in ids:
            return True
        cur = parents.get(cur)
    return False


def _collapse(node: TreeNode, active: set[int]) -> None:
    for inner in internal_nodes(node):
        active.discard(inner.node_id)


def check_sequence(seq: PruneSequence) -> None:
    """Nestedness and threshold monotonicity; raises InvariantError."""
    for a, b in zip(seq.active_sets[:-1], seq.active_sets[1:]):
        if not (b < a):
            raise InvariantError("pruned sequence is not strictly nested")
    if seq.active_sets and not seq.active_sets[-1] == frozenset():
        raise InvariantError("sequence does not end at the root-only tree")
    for a, b in zip(seq.lambdas[:-1], seq.lambdas[1:]):
        if b < a:
            raise InvariantError("thresholds are not non-decreasing")
    if seq.lambdas and seq.lambdas[0] < 0:
        raise InvariantError("negative threshold")
