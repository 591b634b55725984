"""Synthetic datasets with planted contribution rules, plus independent
brute-force oracles used by the test suite.

The oracles re-derive every quantity from scratch (exact rational arithmetic,
plain-python traversals) and share no arithmetic path with the production
modules they check.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .dataset import BINARY, CATEGORICAL, ORDINAL, ContributionMatrix, FeatureKind, FeatureTable
from .grow import TreeNode
from .splits import IN_SUBSET, IS_ONE, LESS_THAN, ScoredSplit, Split


class OracleTooLarge(ValueError):
    """The exhaustive oracle refuses trees above its enumeration budget."""


@dataclass(frozen=True)
class GuardClause:
    """One conjunct of a rule guard; expect=False selects the predicate-false side."""

    split: Split
    expect: bool = True


@dataclass(frozen=True)
class PlantedRule:
    """Where every guard clause holds, the target column's contribution gains
    contribution_level plus optional per-rule Gaussian noise."""

    guards: tuple[GuardClause, ...]
    target_var: int
    contribution_level: float
    noise_sd: float = 0.0


@dataclass(frozen=True)
class ColumnSpec:
    """Column kind for generation; ordinal columns may sample from a fixed grid
    instead of the continuous unit interval."""

    kind: FeatureKind
    grid: tuple[float, ...] | None = None


def generate(rules, m: int, n: int, seed: int,
             columns: list[ColumnSpec] | None = None,
             noise_sd: float = 0.0) -> tuple[FeatureTable, ContributionMatrix, dict]:
    """Draw features uniformly per column kind and plant rule contributions.

    Pure in (rules, m, n, seed, columns, noise_sd). Features depend only on
    (m, seed, columns), so rule variants over the same seed share features.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    if columns is None:
        columns = [ColumnSpec(FeatureKind.ordinal())] * n
    if len(columns) != n:
        raise ValueError("columns spec length must equal n")
    for rule in rules:
        if not 0 <= rule.target_var < n:
            raise ValueError(f"rule targets out-of-range column {rule.target_var}")
        for clause in rule.guards:
            if not 0 <= clause.split.var_index < n:
                raise ValueError(f"guard references out-of-range column {clause.split.var_index}")
        if rule.noise_sd < 0:
            raise ValueError("rule noise_sd must be nonnegative")

    rng = np.random.default_rng(seed)
    values = np.empty((m, n), dtype=np.float64)
    for j, spec in enumerate(columns):
        if spec.kind.kind == BINARY:
            values[:, j] = rng.integers(0, 2, size=m)
        elif spec.kind.kind == CATEGORICAL:
            values[:, j] = rng.integers(0, len(spec.kind.levels), size=m)
        elif spec.grid is not None:
            grid = np.asarray(spec.grid, dtype=np.float64)
            values[:, j] = grid[rng.integers(0, len(grid), size=m)]
        else:
            values[:, j] = rng.random(m)

    contribs = np.zeros((m, n), dtype=np.float64)
    for rule in rules:
        active = np.ones(m, dtype=bool)
        for clause in rule.guards:
            mask = clause.split.right_mask(values[:, clause.split.var_index])
            active &= mask if clause.expect else ~mask
        contribs[active, rule.target_var] += rule.contribution_level
        if rule.noise_sd > 0:
            eps = rng.normal(0.0, rule.noise_sd, size=m)
            contribs[active, rule.target_var] += eps[active]
    if noise_sd > 0:
        contribs += rng.normal(0.0, noise_sd, size=(m, n))

    table = FeatureTable(
        tuple(f"x{j}" for j in range(n)),
        tuple(spec.kind for spec in columns),
        values,
        tuple(str(i) for i in range(m)),
    )
    matrix = ContributionMatrix(contribs, contribs.sum(axis=1))
    truth = {
        "m": m, "n": n, "seed": seed, "noise_sd": noise_sd,
        "columns": [_column_spec_dict(spec) for spec in columns],
        "rules": [_rule_dict(rule) for rule in rules],
    }
    return table, matrix, truth


def _column_spec_dict(spec: ColumnSpec) -> dict:
    out: dict = {"kind": spec.kind.kind}
    if spec.kind.is_categorical:
        out["levels"] = list(spec.kind.levels)
    if spec.grid is not None:
        out["grid"] = list(spec.grid)
    return out


def _rule_dict(rule: PlantedRule) -> dict:
    return {
        "target_var": rule.target_var,
        "contribution_level": rule.contribution_level,
        "noise_sd": rule.noise_sd,
        "guards": [
            {
                "var_index": clause.split.var_index,
                "kind": clause.split.kind,
                "threshold": clause.split.threshold,
                "subset": list(clause.split.subset) if clause.split.subset else None,
                "expect": clause.expect,
            }
            for clause in rule.guards
        ],
    }


def rule_from_dict(raw: dict) -> PlantedRule:
    guards = []
    for g in raw["guards"]:
        subset = tuple(g["subset"]) if g.get("subset") else None
        guards.append(GuardClause(
            Split(g["var_index"], g["kind"], threshold=g.get("threshold"), subset=subset),
            expect=bool(g.get("expect", True)),
        ))
    return PlantedRule(tuple(guards), raw["target_var"],
                       raw["contribution_level"], raw.get("noise_sd", 0.0))


def two_rule_columns(spurious: bool = False) -> list[ColumnSpec]:
    """Six mixed columns for the nested two-rule fixture. Column 2 uses a
    two-point dyadic grid so the planted threshold 0.5 is exactly the midpoint."""
    plain = ColumnSpec(FeatureKind.ordinal())
    gridded = ColumnSpec(FeatureKind.ordinal(), grid=(0.25, 0.75))
    return [plain, plain, gridded, plain, ColumnSpec(FeatureKind.binary()), plain]


def two_rule_rules() -> list[PlantedRule]:
    """Nested pair: column 2's contribution jumps below 0.5; inside the other
    region, column 4's contribution follows its own binary value."""
    below = GuardClause(Split(2, LESS_THAN, threshold=0.5))
    return [
        PlantedRule((below,), target_var=2, contribution_level=8.0),
        PlantedRule((GuardClause(below.split, expect=False),
                     GuardClause(Split(4, IS_ONE))), target_var=4, contribution_level=1.0),
    ]


def spurious_rule(level: float) -> PlantedRule:
    """Rule on column 5 used to plant a build-only (or sign-flipped) pattern."""
    return PlantedRule((GuardClause(Split(5, LESS_THAN, threshold=0.5)),),
                       target_var=5, contribution_level=level)


# ---------------------------------------------------------------------------
# Exact-arithmetic oracles.


def _exact_scaled(values) -> tuple[list[int], int]:
    """Represent floats exactly as integers over one power-of-two denominator."""
    ratios = [float(v).as_integer_ratio() for v in values]
    common = max((den for _, den in ratios), default=1)
    return [num * (common // den) for num, den in ratios], common


def _exact_candidates_for_column(column: int, kind: FeatureKind, values: list[float],
                                 scaled: list[int], denom: int, min_node_size: int,
                                 max_categorical_exhaustive: int):
    """Yield (split, g_num, g_den) for every admissible candidate, thresholds
    ascending (subsets are tie-compared explicitly by the caller).
    g = g_num / g_den exactly."""
    n = len(values)
    total = sum(scaled)

    def result(sum_right: int, n_right: int):
        n_left = n - n_right
        if n_right < min_node_size or n_left < min_node_size or n_right == 0 or n_left == 0:
            return None
        sum_left = total - sum_right
        return sum_left * n_right - sum_right * n_left, n_left * n_right * denom

    if kind.kind == BINARY:
        if 0.0 in values and 1.0 in values:
            ones = [s for s, v in zip(scaled, values) if v == 1.0]
            out = result(sum(ones), len(ones))
            if out is not None:
                yield Split(column, IS_ONE), out[0], out[1]
        return

    if kind.kind == ORDINAL:
        order = sorted(range(n), key=lambda t: values[t])
        prefix = 0
        count = 0
        for pos in range(n - 1):
            prefix += scaled[order[pos]]
            count += 1
            a, b = values[order[pos]], values[order[pos + 1]]
            if a == b:
                continue
            d = (a + b) / 2.0
            if d <= a:
                d = b
            out = result(prefix, count)
            if out is not None:
                yield Split(column, LESS_THAN, threshold=d), out[0], out[1]
        return

    sums: dict[int, int] = {}
    counts: dict[int, int] = {}
    for s, v in zip(scaled, values):
        code = int(v)
        sums[code] = sums.get(code, 0) + s
        counts[code] = counts.get(code, 0) + 1
    codes = sorted(counts)
    if len(codes) < 2:
        return
    if len(codes) <= max_categorical_exhaustive:
        lowest, others = codes[0], codes[1:]
        subsets = []
        for mask in range((1 << len(others)) - 1):
            subsets.append(tuple([lowest] + [c for k, c in enumerate(others)
                                             if mask >> k & 1]))
    else:
        means = {c: Fraction(sums[c], counts[c] * denom) for c in codes}
        order = sorted(codes, key=lambda c: (means[c], c))
        subsets = [tuple(sorted(order[:k])) for k in range(1, len(order))]
    for subset in subsets:
        out = result(sum(sums[c] for c in subset), sum(counts[c] for c in subset))
        if out is not None:
            yield Split(column, IN_SUBSET, subset=subset), out[0], out[1]


def oracle_best_split(subset_indices, table: FeatureTable,
                      contributions: ContributionMatrix, *, min_node_size: int = 1,
                      max_categorical_exhaustive: int = 8) -> ScoredSplit | None:
    """Exhaustively score every candidate split with exact rational arithmetic,
    applying the production tie-break rules."""
    idx = sorted(int(i) for i in np.asarray(subset_indices).ravel())
    if len(idx) < 2 * min_node_size:
        return None
    best = None  # (abs_num, den, split, g_num)
    for column in range(table.n_cols):
        values = [float(table.values[i, column]) for i in idx]
        scaled, denom = _exact_scaled(contributions.values[i, column] for i in idx)
        for split, g_num, g_den in _exact_candidates_for_column(
                column, table.kinds[column], values, scaled, denom,
                min_node_size, max_categorical_exhaustive):
            a_num = abs(g_num)
            if best is None:
                best = (a_num, g_den, split, g_num)
                continue
            lhs = a_num * best[1]
            rhs = best[0] * g_den
            if lhs > rhs:
                best = (a_num, g_den, split, g_num)
            elif lhs == rhs and split.var_index == best[2].var_index:
                if split.kind == IN_SUBSET and split.subset < best[2].subset:
                    best = (a_num, g_den, split, g_num)
    if best is None or best[0] == 0:
        return None
    a_num, g_den, split, g_num = best
    def goes_right(value: float) -> bool:
        if split.kind == IS_ONE:
            return value == 1.0
        if split.kind == LESS_THAN:
            return value < split.threshold
        return int(value) in set(split.subset)

    idx_right = [i for i in idx if goes_right(float(table.values[i, split.var_index]))]
    right_set = set(idx_right)
    idx_left = [i for i in idx if i not in right_set]
    left_scaled, ld = _exact_scaled(contributions.values[i, split.var_index] for i in idx_left)
    right_scaled, rd = _exact_scaled(contributions.values[i, split.var_index] for i in idx_right)
    left_mean = Fraction(sum(left_scaled), len(left_scaled) * ld)
    right_mean = Fraction(sum(right_scaled), len(right_scaled) * rd)
    return ScoredSplit(split, float(Fraction(g_num, g_den)), float(left_mean),
                       float(right_mean), len(idx_left), len(idx_right))


def oracle_route(sample_row, root: TreeNode) -> tuple[int, tuple[int, ...]]:
    """Independent predicate-evaluation descent."""
    node = root
    path = []
    while node.split is not None:
        split = node.split.split
        value = float(sample_row[split.var_index])
        if split.kind == IS_ONE:
            right = value == 1.0
        elif split.kind == LESS_THAN:
            right = value < split.threshold
        else:
            right = int(value) in set(split.subset)
        path.append(node.node_id)
        node = node.right if right else node.left
    return node.node_id, tuple(path)


def _oracle_internals(root: TreeNode) -> dict[int, TreeNode]:
    out = {}

    def walk(node):
        if node.split is not None:
            out[node.node_id] = node
            walk(node.left)
            walk(node.right)

    walk(root)
    return out


def oracle_all_subtrees(root: TreeNode, limit: int = 12) -> list[frozenset[int]]:
    """Every tree obtainable by collapsing internal nodes of root, as the set
    of surviving internal node ids (the root-only tree is the empty set)."""
    if len(_oracle_internals(root)) > limit:
        raise OracleTooLarge(f"more than {limit} internal nodes")

    def rec(node) -> list[frozenset[int]]:
        if node.split is None:
            return [frozenset()]
        combos = [frozenset()]
        for left in rec(node.left):
            for right in rec(node.right):
                combos.append(frozenset({node.node_id}) | left | right)
        return combos

    return rec(root)


def oracle_penalized(root: TreeNode, active: frozenset[int], lam: Fraction) -> Fraction:
    """Exact penalized strength of a collapse-subtree."""
    internals = _oracle_internals(root)
    total = sum((Fraction(abs(internals[i].split.g_value)) for i in active), Fraction(0))
    return total - lam * len(active)


def oracle_prune_sequence(root: TreeNode):
    """Exact re-derivation of the weakest-link sequence: (active id sets,
    thresholds as Fractions)."""
    internals = _oracle_internals(root)
    parent = {}
    children = {}
    for node in internals.values():
        children[node.node_id] = (node.left, node.right)
        for child in (node.left, node.right):
            parent[child.node_id] = node.node_id

    active = set(internals)
    sets = [frozenset(active)]
    lambdas: list[Fraction] = []
    while active:
        averages = {}

        def tally(node) -> tuple[Fraction, int]:
            if node.split is None or node.node_id not in active:
                return Fraction(0), 0
            ls, lc = tally(node.left)
            rs, rc = tally(node.right)
            strength = Fraction(abs(node.split.g_value)) + ls + rs
            count = 1 + lc + rc
            averages[node.node_id] = strength / count
            return strength, count

        tally(root)
        minimum = min(averages.values())
        minimizers = sorted(t for t, avg in averages.items() if avg == minimum)
        chosen = []
        for t in minimizers:
            cur = parent.get(t)
            inside = False
            while cur is not None:
                if cur in minimizers:
                    inside = True
                    break
                cur = parent.get(cur)
            if not inside:
                chosen.append(t)
        for t in chosen:
            stack = [internals[t]]
            while stack:
                node = stack.pop()
                if node.split is not None:
                    active.discard(node.node_id)
                    stack.extend((node.left, node.right))
        lambdas.append(minimum)
        sets.append(frozenset(active))
    return sets, lambdas


def oracle_validation_strength(root: TreeNode, node_id: int, features,
                               contributions) -> Fraction:
    """Exact Eq.-style validation strength of one internal node, routing every
    sample independently."""
    rows = range(np.asarray(features).shape[0])
    reached_left, reached_right = [], []
    target = None
    for r in rows:
        node = root
        while node.split is not None:
            split = node.split.split
            value = float(features[r][split.var_index])
            if split.kind == IS_ONE:
                right = value == 1.0
            elif split.kind == LESS_THAN:
                right = value < split.threshold
            else:
                right = int(value) in set(split.subset)
            if node.node_id == node_id:
                target = node
                (reached_right if right else reached_left).append(r)
                break
            node = node.right if right else node.left
    if target is None:
        raise KeyError(f"node {node_id} is not internal")
    if not reached_left or not reached_right:
        return Fraction(0)
    var = target.split.split.var_index
    left = sum((Fraction(float(contributions[r][var])) for r in reached_left), Fraction(0))
    right = sum((Fraction(float(contributions[r][var])) for r in reached_right), Fraction(0))
    diff = left / len(reached_left) - right / len(reached_right)
    sign = 1 if target.split.g_value > 0 else -1
    return sign * diff
