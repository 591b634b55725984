"""Command-line pipeline: build, explain, render, synth.

Exit codes: 0 success, 2 input validation failure, 3 internal invariant
breach, 4 model endpoint failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import synth
from .dataset import (
    DatasetError,
    FeatureKind,
    load_dataset,
    load_features,
    schema_to_dict,
    split_dataset,
    write_contributions,
    write_features,
)
from .explain import EndpointError, ModelEndpoint, PerturbationPolicy, build_contribution_matrix
from .grow import GrowParams, InvariantError, grow_tree, validate_tree
from .prune import check_sequence, prune_sequence
from .render import export_tree, import_tree, render, render_json
from .select import select_best

DEFAULTS = {
    "max_depth": 100,
    "min_node_size": 20,
    "max_categorical_exhaustive": 8,
    "validation_fraction": 0.25,
    "seed": 42,
    "workers": 1,
}

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_INVARIANT = 3
EXIT_ENDPOINT = 4


def _merge_config(args: argparse.Namespace) -> dict:
    """CLI flags win over the config file, which wins over built-in defaults."""
    merged = dict(DEFAULTS)
    if getattr(args, "config", None):
        with open(args.config, encoding="utf-8") as fh:
            loaded = json.load(fh)
        unknown = set(loaded) - set(DEFAULTS) - {"positive_label"}
        if unknown:
            raise DatasetError(f"unknown config keys: {sorted(unknown)}")
        merged.update(loaded)
    for key in DEFAULTS:
        value = getattr(args, key, None)
        if value is not None:
            merged[key] = value
    if getattr(args, "positive_label", None) is not None:
        merged["positive_label"] = args.positive_label
    return merged


def cmd_build(args: argparse.Namespace) -> int:
    cfg = _merge_config(args)
    table, contribs = load_dataset(args.features, args.contributions, args.schema)
    params = GrowParams(
        max_depth=cfg["max_depth"],
        min_node_size=cfg["min_node_size"],
        max_categorical_exhaustive=cfg["max_categorical_exhaustive"],
        validation_fraction=cfg["validation_fraction"],
        seed=cfg["seed"],
    )
    split = split_dataset(table.n_rows, params.validation_fraction, params.seed)
    root = grow_tree(table, contribs, split.build_indices, params,
                     positive_label=cfg.get("positive_label"),
                     workers=cfg["workers"])
    validate_tree(root, table, params)
    seq = prune_sequence(root)
    check_sequence(seq)
    report = select_best(seq,
                         table.values[split.validation_indices],
                         contribs.values[split.validation_indices])
    chosen_active = seq.active_sets[report.chosen_k]

    out_path = Path(args.out)
    doc = export_tree(root, table.names, table.kinds, active=chosen_active,
                      chosen_k=report.chosen_k, chosen_lambda=report.chosen_lambda,
                      sequence_length=len(seq),
                      g_validation=report.per_tree[report.chosen_k].g_validation,
                      positive_label=cfg.get("positive_label"))
    out_path.write_text(render_json(doc), encoding="utf-8")

    report_path = Path(args.report) if args.report else out_path.parent / "report.json"
    report_doc = {
        "chosen_k": report.chosen_k,
        "chosen_lambda": report.chosen_lambda,
        "sequence_length": len(seq),
        "build_rows": int(split.build_indices.size),
        "validation_rows": int(split.validation_indices.size),
        "seed": params.seed,
        "per_tree": [
            {"k": t.k, "internal_nodes": t.internal_count,
             "lambda": seq.lambda_for(t.k), "g_validation": t.g_validation}
            for t in report.per_tree
        ],
    }
    report_path.write_text(render_json(report_doc), encoding="utf-8")

    if args.sequence:
        seq_doc = {
            "lambdas": list(seq.lambdas),
            "trees": [sorted(active) for active in seq.active_sets],
            "collapsed_at_step": [sorted(c) for c in seq.collapsed_at_step],
        }
        Path(args.sequence).write_text(render_json(seq_doc), encoding="utf-8")
    if args.dot:
        Path(args.dot).write_text(
            render(root, table.names, table.kinds, "dot", active=chosen_active),
            encoding="utf-8")
    if args.ascii:
        sys.stdout.write(render(root, table.names, table.kinds, "ascii",
                                active=chosen_active))
    return EXIT_OK


def cmd_explain(args: argparse.Namespace) -> int:
    table = load_features(args.features, args.schema)
    policy = PerturbationPolicy.for_table(
        table,
        mode="leave_one_out" if args.mode == "loo" else "mask_sampling",
        num_samples=args.num_samples,
        mask_probability=args.mask_probability,
        ridge=args.ridge,
        seed=args.seed if args.seed is not None else DEFAULTS["seed"],
    )
    if args.cmd:
        endpoint = ModelEndpoint(command=args.cmd, timeout=args.timeout,
                                 batch_size=args.batch_size)
    else:
        host, _, port = args.addr.rpartition(":")
        endpoint = ModelEndpoint(address=(host or "127.0.0.1", int(port)),
                                 timeout=args.timeout, batch_size=args.batch_size)
    with endpoint:
        matrix = build_contribution_matrix(table, endpoint, policy)
    write_contributions(matrix, table.names, args.out, row_ids=table.row_ids)
    return EXIT_OK


def cmd_render(args: argparse.Namespace) -> int:
    doc = json.loads(Path(args.tree).read_text(encoding="utf-8"))
    root, names, kinds = import_tree(doc)
    text = render(root, names, kinds, args.format, max_levels=args.max_levels)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _parse_kinds(tokens: str) -> list[synth.ColumnSpec]:
    specs = []
    for token in tokens.split(","):
        token = token.strip()
        if token == "b":
            specs.append(synth.ColumnSpec(FeatureKind.binary()))
        elif token == "o":
            specs.append(synth.ColumnSpec(FeatureKind.ordinal()))
        elif token.startswith("o"):
            g = int(token[1:])
            grid = tuple((2 * i + 1) / (2 * g) for i in range(g))
            specs.append(synth.ColumnSpec(FeatureKind.ordinal(), grid=grid))
        elif token.startswith("c"):
            n_levels = int(token[1:])
            levels = tuple(f"L{i}" for i in range(n_levels))
            specs.append(synth.ColumnSpec(FeatureKind.categorical(levels)))
        else:
            raise DatasetError(f"unknown column token {token!r}")
    return specs


def cmd_synth(args: argparse.Namespace) -> int:
    if args.preset == "two-rule":
        columns = synth.two_rule_columns()
        rules = synth.two_rule_rules()
        n = len(columns)
    else:
        raw = json.loads(Path(args.rules).read_text(encoding="utf-8"))
        rules = [synth.rule_from_dict(r) for r in raw["rules"]]
        columns = _parse_kinds(args.kinds) if args.kinds else None
        n = len(columns) if columns else args.cols
    table, contribs, truth = synth.generate(rules, args.rows, n, args.seed,
                                            columns=columns, noise_sd=args.noise_sd)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_features(table, out / "features.csv")
    write_contributions(contribs, table.names, out / "contributions.csv",
                        row_ids=table.row_ids)
    (out / "schema.json").write_text(
        json.dumps(schema_to_dict(table.names, table.kinds), indent=2) + "\n",
        encoding="utf-8")
    (out / "truth.json").write_text(json.dumps(truth, indent=2) + "\n", encoding="utf-8")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="girp",
                                     description="Interpretation-tree pipeline")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build", help="grow, prune, and select an interpretation tree")
    p.add_argument("--features", required=True)
    p.add_argument("--contributions", required=True)
    p.add_argument("--schema", required=True)
    p.add_argument("--out", required=True, help="chosen tree JSON path")
    p.add_argument("--report", help="selection report path (default: report.json next to --out)")
    p.add_argument("--sequence", help="optional full pruned-sequence JSON path")
    p.add_argument("--dot", help="optional DOT export of the chosen tree")
    p.add_argument("--ascii", action="store_true", help="print the chosen tree to stdout")
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--max-depth", dest="max_depth", type=int)
    p.add_argument("--min-node", dest="min_node_size", type=int)
    p.add_argument("--max-categorical-exhaustive", dest="max_categorical_exhaustive", type=int)
    p.add_argument("--validation-fraction", dest="validation_fraction", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--positive-label", dest="positive_label")
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("explain", help="build a contribution matrix from a model endpoint")
    p.add_argument("--features", required=True)
    p.add_argument("--schema", required=True)
    p.add_argument("--out", required=True, help="contributions CSV path")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--cmd", help="model server command line (stdio transport)")
    group.add_argument("--addr", help="model server host:port (TCP transport)")
    p.add_argument("--mode", choices=["loo", "mask"], default="loo")
    p.add_argument("--num-samples", dest="num_samples", type=int, default=200)
    p.add_argument("--mask-probability", dest="mask_probability", type=float, default=0.5)
    p.add_argument("--ridge", type=float, default=1e-6)
    p.add_argument("--seed", type=int)
    p.add_argument("--batch-size", dest="batch_size", type=int, default=64)
    p.add_argument("--timeout", type=float, default=10.0)
    p.set_defaults(func=cmd_explain)

    p = sub.add_parser("render", help="render an exported tree")
    p.add_argument("--tree", required=True)
    p.add_argument("--format", choices=["ascii", "dot", "json"], default="ascii")
    p.add_argument("--max-levels", dest="max_levels", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("synth", help="write a synthetic fixture dataset")
    p.add_argument("--preset", choices=["two-rule"])
    p.add_argument("--rules", help="rules JSON file (object with a 'rules' list)")
    p.add_argument("--rows", type=int, default=2000)
    p.add_argument("--cols", type=int, default=6)
    p.add_argument("--kinds", help="comma list of column tokens: b, o, oG (grid), cK")
    p.add_argument("--seed", type=int, default=DEFAULTS["seed"])
    p.add_argument("--noise-sd", dest="noise_sd", type=float, default=0.0)
    p.add_argument("--out-dir", dest="out_dir", required=True)
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "synth" and not (args.preset or args.rules):
        parser.error("synth needs --preset or --rules")
    try:
        return args.func(args)
    except (DatasetError, FileNotFoundError, json.JSONDecodeError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except InvariantError as exc:
        print(f"invariant breach: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except EndpointError as exc:
        print(f"endpoint failure: {exc}", file=sys.stderr)
        return EXIT_ENDPOINT


if __name__ == "__main__":
    sys.exit(main())
