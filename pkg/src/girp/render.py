"""Tree export and rendering: JSON (lossless round-trip), ASCII, and DOT."""

from __future__ import annotations

import json

from .dataset import FeatureKind
from .grow import NodeStats, TreeNode
from .splits import IN_SUBSET, IS_ONE, LESS_THAN, ScoredSplit, Split

FORMAT_VERSION = 1


def _fmt(x: float) -> str:
    return format(float(x), ".6g")


def _split_dict(scored: ScoredSplit, names, kinds) -> dict:
    split = scored.split
    out = {
        "var_index": split.var_index,
        "var_name": names[split.var_index],
        "kind": split.kind,
        "g_value": scored.g_value,
        "left_mean": scored.left_mean,
        "right_mean": scored.right_mean,
        "left_count": scored.left_count,
        "right_count": scored.right_count,
    }
    if split.kind == LESS_THAN:
        out["threshold"] = split.threshold
    elif split.kind == IN_SUBSET:
        levels = kinds[split.var_index].levels
        out["levels"] = [levels[c] for c in split.subset]
    return out


def node_to_dict(node: TreeNode, names, kinds,
                 active: frozenset[int] | None = None) -> dict:
    out: dict = {
        "node_id": node.node_id,
        "depth": node.depth,
        "n": node.stats.n,
        "mean_predicted_score": node.stats.mean_predicted_score,
    }
    if node.stats.accuracy is not None:
        out["accuracy"] = node.stats.accuracy
    if node.split is not None and (active is None or node.node_id in active):
        out["split"] = _split_dict(node.split, names, kinds)
        out["left"] = node_to_dict(node.left, names, kinds, active)
        out["right"] = node_to_dict(node.right, names, kinds, active)
    return out


def export_tree(root: TreeNode, names, kinds, *, active: frozenset[int] | None = None,
                chosen_k: int | None = None, chosen_lambda: float | None = None,
                sequence_length: int | None = None,
                g_validation: float | None = None,
                positive_label: str | None = None) -> dict:
    """Full export: column metadata plus the (optionally pruned) node tree."""
    doc: dict = {
        "format_version": FORMAT_VERSION,
        "columns": [
            {"name": name, "kind": kind.kind,
             **({"levels": list(kind.levels)} if kind.is_categorical else {})}
            for name, kind in zip(names, kinds)
        ],
        "tree": node_to_dict(root, names, kinds, active),
    }
    if chosen_k is not None:
        doc["chosen_k"] = chosen_k
    if chosen_lambda is not None:
        doc["chosen_lambda"] = chosen_lambda
    if sequence_length is not None:
        doc["sequence_length"] = sequence_length
    if g_validation is not None:
        doc["g_validation"] = g_validation
    if positive_label is not None:
        doc["positive_label"] = positive_label
    return doc


def _node_from_dict(raw: dict, kinds) -> TreeNode:
    stats = NodeStats(raw["n"], raw["mean_predicted_score"], raw.get("accuracy"))
    node = TreeNode(raw["node_id"], raw["depth"], None, stats)
    if "split" in raw:
        s = raw["split"]
        if s["kind"] == LESS_THAN:
            split = Split(s["var_index"], LESS_THAN, threshold=s["threshold"])
        elif s["kind"] == IN_SUBSET:
            levels = kinds[s["var_index"]].levels
            split = Split(s["var_index"], IN_SUBSET,
                          subset=tuple(sorted(levels.index(v) for v in s["levels"])))
        else:
            split = Split(s["var_index"], IS_ONE)
        node.split = ScoredSplit(split, s["g_value"], s["left_mean"], s["right_mean"],
                                 s["left_count"], s["right_count"])
        node.left = _node_from_dict(raw["left"], kinds)
        node.right = _node_from_dict(raw["right"], kinds)
    return node


def import_tree(doc: dict) -> tuple[TreeNode, tuple[str, ...], tuple[FeatureKind, ...]]:
    """Rebuild a tree (sample indices are not exported) plus column metadata."""
    names = tuple(c["name"] for c in doc["columns"])
    kinds = tuple(
        FeatureKind.categorical(c["levels"]) if c["kind"] == "categorical"
        else FeatureKind(c["kind"])
        for c in doc["columns"]
    )
    return _node_from_dict(doc["tree"], kinds), names, kinds


def render_json(doc: dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def trees_structurally_equal(a: TreeNode, b: TreeNode, names, kinds) -> bool:
    return node_to_dict(a, names, kinds) == node_to_dict(b, names, kinds)


def _split_label(scored: ScoredSplit, names, kinds) -> str:
    split = scored.split
    name = names[split.var_index]
    if split.kind == IS_ONE:
        pred = f"{name} = 1"
    elif split.kind == LESS_THAN:
        pred = f"{name} < {_fmt(split.threshold)}"
    else:
        levels = kinds[split.var_index].levels
        pred = f"{name} in {{{','.join(levels[c] for c in split.subset)}}}"
    return (f"{pred} | G={_fmt(scored.g_value)} | "
            f"L={_fmt(scored.left_mean)} R={_fmt(scored.right_mean)}")


def _stats_line(node: TreeNode) -> str:
    line = f"n={node.stats.n}, score={_fmt(node.stats.mean_predicted_score)}"
    if node.stats.accuracy is not None:
        line += f", acc={_fmt(node.stats.accuracy)}"
    return line


def render_ascii(root: TreeNode, names, kinds,
                 active: frozenset[int] | None = None,
                 max_levels: int | None = None) -> str:
    """Indented tree; one stats line per node and one predicate line per split.
    Subtrees below max_levels collapse to an elision marker."""
    lines: list[str] = []

    def visit(node: TreeNode, indent: int, tag: str):
        pad = "  " * indent
        if max_levels is not None and node.depth >= max_levels:
            lines.append(f"{pad}{tag}…")
            return
        lines.append(f"{pad}{tag}{_stats_line(node)}")
        if node.split is not None and (active is None or node.node_id in active):
            lines.append(f"{pad}  {_split_label(node.split, names, kinds)}")
            visit(node.left, indent + 1, "[L] ")
            visit(node.right, indent + 1, "[R] ")

    visit(root, 0, "")
    return "\n".join(lines) + "\n"


def render_dot(root: TreeNode, names, kinds,
               active: frozenset[int] | None = None,
               max_levels: int | None = None) -> str:
    """Graphviz digraph with one box per node, emitted in node_id order."""
    nodes: list[str] = []
    edges: list[str] = []

    def escape(text: str) -> str:
        return text.replace("\\", "\\\\").replace('"', '\\"')

    def visit(node: TreeNode):
        if max_levels is not None and node.depth >= max_levels:
            nodes.append(f'  n{node.node_id} [label="…"];')
            return
        internal = node.split is not None and (active is None or node.node_id in active)
        parts = []
        if internal:
            parts.append(_split_label(node.split, names, kinds))
        parts.append(_stats_line(node))
        label = "\\n".join(escape(p) for p in parts)
        nodes.append(f'  n{node.node_id} [label="{label}"];')
        if internal:
            edges.append(f'  n{node.node_id} -> n{node.left.node_id} [label="no"];')
            edges.append(f'  n{node.node_id} -> n{node.right.node_id} [label="yes"];')
            visit(node.left)
            visit(node.right)

    visit(root)
    body = "\n".join(["digraph interpretation_tree {",
                      "  node [shape=box];", *nodes, *edges, "}"])
    return body + "\n"


def render(root: TreeNode, names, kinds, fmt: str,
           active: frozenset[int] | None = None,
           max_levels: int | None = None, **export_kwargs) -> str:
    if fmt == "ascii":
        return render_ascii(root, names, kinds, active, max_levels)
    if fmt == "dot":
        return render_dot(root, names, kinds, active, max_levels)
    if fmt == "json":
        return render_json(export_tree(root, names, kinds, active=active, **export_kwargs))
    raise ValueError(f"unknown render format {fmt!r}")
