"""Command-line surface: summarize | discover | study | compare | synth.

Exit codes: 0 success, 1 usage, 2 I/O or data, 3 non-convergence, 4 schema
mismatch. All outputs are deterministic for a fixed seed; files are written
atomically (temp + rename). The default output directory can be set with the
FIRECAUSAL_OUT environment variable.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from typing import Optional, Sequence

import numpy as np

from .baselines import compare_methods, fit_forest, fit_ols
from .dataset import (
    Column,
    ColumnSchema,
    DatasetError,
    FIRE_SCHEMA,
    Table,
    binarize_at_mean,
    correlation_matrix,
    load_csv,
    summarize,
    synthesize_fire_dataset,
    write_csv,
)
from .discovery import DiscoveryConfig, DiscoveryError, learn_structure
from .graph import ConstraintSet, Dag, GraphError, constraints_from_json
from .inference import (
    CausalQuery,
    DOMAIN_CONSTRAINTS,
    DagConfigKind,
    build_config,
    estimate_ate,
    run_study,
    study_to_json,
    study_to_markdown,
)

DEFAULT_SEED = 42

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_IO = 2
EXIT_CONVERGENCE = 3
EXIT_SCHEMA = 4

_STAT_ROWS = (
    ("Minimum", "minimum"),
    ("Maximum", "maximum"),
    ("Average", "mean"),
    ("Standard Deviation", "std_dev"),
    ("Skewness", "skewness"),
)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _write_text(path: str, text: str) -> None:
    directory = os.path.dirname(path) or "."
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _load_schema(spec: str) -> ColumnSchema:
    if spec == "fire8":
        return FIRE_SCHEMA
    with open(spec, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    return ColumnSchema(tuple(Column(c["name"], c.get("unit", ""), c["role"]) for c in payload))


def _load_table(args) -> Table:
    if not args.data:
        raise DatasetError("--data is required for this command")
    return load_csv(args.data, _load_schema(args.schema))


def _summary_markdown(table: Table) -> str:
    names = table.names
    stats = {name: summarize(table, name) for name in names}
    lines = ["# Dataset summary", ""]
    lines.append("| Statistic | " + " | ".join(names) + " |")
    lines.append("| --- |" + " --- |" * len(names))
    for label, attr in _STAT_ROWS:
        cells = [f"{getattr(stats[n], attr):.4f}" for n in names]
        lines.append(f"| {label} | " + " | ".join(cells) + " |")
    lines.append("")
    lines.append("## Correlation matrix")
    lines.append("")
    corr = correlation_matrix(table)
    lines.append("| | " + " | ".join(names) + " |")
    lines.append("| --- |" + " --- |" * len(names))
    for i, n in enumerate(names):
        lines.append(f"| {n} | " + " | ".join(f"{corr[i, j]:.4f}" for j in range(len(names))) + " |")
    return "\n".join(lines) + "\n"


def _summary_json(table: Table) -> str:
    names = table.names
    stats = {name: summarize(table, name) for name in names}
    corr = correlation_matrix(table)
    payload = {
        "columns": {
            n: {attr: getattr(stats[n], attr) for _, attr in _STAT_ROWS} for n in names
        },
        "correlation_matrix": {"names": list(names), "values": corr.tolist()},
    }
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def cmd_summarize(args) -> int:
    try:
        table = _load_table(args)
    except (OSError, DatasetError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    md = _summary_markdown(table)
    _write_text(os.path.join(args.out, "summary.md"), md)
    _write_text(os.path.join(args.out, "summary.json"), _summary_json(table))
    print(md, end="")
    return EXIT_OK


def cmd_discover(args) -> int:
    try:
        table = _load_table(args)
        constraints = ConstraintSet.empty()
        if args.constraints:
            with open(args.constraints, "r", encoding="utf-8") as fh:
                constraints = constraints_from_json(fh.read())
    except (OSError, DatasetError, GraphError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    config = DiscoveryConfig(
        l1_penalty=args.l1, edge_threshold=args.threshold, standardize=not args.no_standardize
    )
    try:
        dag = learn_structure(table, constraints, config)
    except DiscoveryError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    _write_text(os.path.join(args.out, "dag.dot"), dag.to_dot())
    _write_text(os.path.join(args.out, "dag.json"), dag.to_json())
    print(dag.to_dot(), end="")
    return EXIT_OK


_KINDS = {
    "isolated": DagConfigKind.ISOLATED,
    "learned": DagConfigKind.LEARNED,
    "domain": DagConfigKind.DOMAIN_AUGMENTED,
    "hypothetical": DagConfigKind.HYPOTHETICAL,
}


def _learned_dag(args, table: Table, kind: DagConfigKind) -> Optional[Dag]:
    if args.dag:
        with open(args.dag, "r", encoding="utf-8") as fh:
            return Dag.from_json(fh.read())
    # When the learned graph will be augmented with domain edges, constrain
    # the learner up front so the combination cannot form a cycle.
    constraints = DOMAIN_CONSTRAINTS if kind is DagConfigKind.DOMAIN_AUGMENTED else None
    return learn_structure(table, constraints=constraints)


def cmd_study(args) -> int:
    try:
        table = _load_table(args)
    except (OSError, DatasetError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    kind = _KINDS[args.kind]
    learned = None
    if kind in (DagConfigKind.LEARNED, DagConfigKind.DOMAIN_AUGMENTED):
        try:
            learned = _learned_dag(args, table, kind)
        except DiscoveryError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_CONVERGENCE
        except (OSError, GraphError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_IO
    rows = run_study(table, kind, learned, seed=args.seed)
    md = study_to_markdown(rows)
    _write_text(os.path.join(args.out, "study.md"), md)
    _write_text(os.path.join(args.out, "study.json"), study_to_json(rows))
    print(md, end="")
    if all(row.error is not None for row in rows):
        return EXIT_IO
    return EXIT_OK


def cmd_compare(args) -> int:
    try:
        table = _load_table(args)
    except (OSError, DatasetError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    variables = tuple(v for v in args.fix.split(",") if v) if args.fix else ()
    outcome = table.schema.outcome_name
    try:
        models = [
            fit_ols(table, outcome),
            fit_forest(table, outcome, seed=args.seed),
        ]
        estimates = []
        for var in variables:
            dag = build_config(
                DagConfigKind.HYPOTHETICAL,
                var,
                variables=table.schema.input_names,
                outcome=outcome,
            )
            query = CausalQuery(dag, var, outcome, binarize_at_mean(table, var))
            estimates.append(estimate_ate(table, query))
        report = compare_methods(table, models, estimates, variables)
    except (DatasetError, GraphError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    _write_text(os.path.join(args.out, "compare.md"), report.to_markdown())
    _write_text(os.path.join(args.out, "compare.json"), report.to_json())
    _write_text(os.path.join(args.out, "compare_plot.csv"), report.plot_csv())
    print(report.to_markdown(), end="")
    return EXIT_OK


def cmd_synth(args) -> int:
    try:
        table = synthesize_fire_dataset(args.n, args.seed)
        path = os.path.join(args.out, "synthetic.csv")
        os.makedirs(args.out, exist_ok=True)
        write_csv(table, path)
    except (OSError, DatasetError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    print(_summary_markdown(table), end="")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="firecausal", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--data", help="input CSV path")
        p.add_argument("--schema", default="fire8", help="'fire8' or a schema JSON file")
        p.add_argument("--seed", type=int, default=DEFAULT_SEED)
        p.add_argument(
            "--out",
            default=os.environ.get("FIRECAUSAL_OUT", "."),
            help="output directory (default: $FIRECAUSAL_OUT or cwd)",
        )

    p = sub.add_parser("summarize", help="per-column statistics and correlation matrix")
    common(p)
    p.set_defaults(func=cmd_summarize)

    p = sub.add_parser("discover", help="learn a DAG from the data")
    common(p)
    p.add_argument("--constraints", help="JSON file with required/forbidden edges")
    p.add_argument("--l1", type=float, default=0.1)
    p.add_argument("--threshold", type=float, default=0.3)
    p.add_argument("--no-standardize", action="store_true")
    p.set_defaults(func=cmd_discover)

    p = sub.add_parser("study", help="ATE + refuters for every input variable")
    common(p)
    p.add_argument("--kind", choices=sorted(_KINDS), required=True)
    p.add_argument("--dag", help="learned DAG JSON (otherwise learned from the data)")
    p.set_defaults(func=cmd_study)

    p = sub.add_parser("compare", help="predictive vs. causal behavior under interventions")
    common(p)
    p.add_argument("--fix", help="comma-separated variables to fix at their means")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("synth", help="write a synthetic dataset")
    common(p)
    p.add_argument("--n", type=int, default=144)
    p.set_defaults(func=cmd_synth)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
