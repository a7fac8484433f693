"""``localrules`` command line: explain, evaluate, compare, neighborhood.

Exit codes: 0 success, 1 usage error, 2 data or schema error, 3 black-box error.
"""

from __future__ import annotations

import argparse
import sys
from contextlib import contextmanager
from pathlib import Path

from . import harness
from .baselines import METHODS
from .datasets import GERMAN_CSV, GERMAN_SCHEMA
from .distance import KINDS, NEUCLID
from .errors import BlackBoxError, DataError
from .explanation import ExplainParams
from .genetic import GAParams
from .metrics import EvalRecord
from .tree import TreeParams

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_BLACKBOX = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _common(p: argparse.ArgumentParser, multi_method: bool = False) -> None:
    g = p.add_argument_group("data and model")
    g.add_argument("--data", default=str(GERMAN_CSV), help="CSV file (default: bundled german credit data)")
    g.add_argument("--schema", default=None, help="schema JSON (default: bundled german schema when --data is unset)")
    g.add_argument("--blackbox", default=harness.BUILTIN_ENSEMBLE,
                   help="builtin:ensemble, cmd:<command line> or http:<url> (default: %(default)s)")
    g.add_argument("--trees", type=int, default=100, help="trees in the built-in ensemble (default: %(default)s)")
    g.add_argument("--model-seed", type=int, default=harness.DEFAULT_SEED,
                   help="seed of the train/test split and the built-in ensemble (default: %(default)s)")
    g.add_argument("--reference", default="test",
                   help="rows mutation samples from: test, train, all or a CSV path (default: %(default)s)")
    g.add_argument("--timeout", type=float, default=60.0, help="seconds to wait on an external black box")

    g = p.add_argument_group("explanation")
    if multi_method:
        g.add_argument("--method", default="lore,global",
                       help=f"comma-separated methods out of {', '.join(METHODS)} (default: %(default)s)")
    else:
        g.add_argument("--method", choices=METHODS, default="lore")
    g.add_argument("--instances", default="0", help="test-set rows: i, a:b, comma list, or all (default: %(default)s)")
    g.add_argument("--seed", type=int, default=harness.DEFAULT_SEED, help="explanation seed (default: %(default)s)")
    g.add_argument("--distance", choices=KINDS, default=NEUCLID)
    g.add_argument("--neighborhood-size", type=int, default=GAParams.N, metavar="N")
    g.add_argument("--generations", type=int, default=GAParams.G, metavar="G")
    g.add_argument("--pc", type=float, default=GAParams.pc)
    g.add_argument("--pm", type=float, default=GAParams.pm)
    g.add_argument("--min-leaf", type=int, default=TreeParams.min_leaf)
    g.add_argument("--max-depth", type=int, default=None)
    g.add_argument("--jobs", type=int, default=1, help="worker processes (built-in black box only)")

    g = p.add_argument_group("output")
    g.add_argument("--output", "-o", help="write here instead of stdout")
    g.add_argument("--format", choices=("text", "structured"), default="text")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="localrules", description="Local rule-based explanations of black-box classifiers.")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("explain", help="explain selected test instances")
    _common(p)
    p.add_argument("--dump-tree", action="store_true", help="append the surrogate tree to text output")

    p = sub.add_parser("evaluate", help="score one method over selected test instances")
    _common(p)

    p = sub.add_parser("compare", help="evaluate several methods on the same instances")
    _common(p, multi_method=True)

    p = sub.add_parser("neighborhood", help="dump the neighborhood of one instance as CSV")
    _common(p)
    return ap


def _params(args) -> ExplainParams:
    try:
        ga = GAParams(N=args.neighborhood_size, G=args.generations, pc=args.pc, pm=args.pm, seed=args.seed)
        tree = TreeParams(min_leaf=args.min_leaf, max_depth=args.max_depth)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    return ExplainParams(ga=ga, tree=tree, distance=args.distance)


def _setup(args) -> harness.Setup:
    schema = args.schema
    if schema is None:
        if Path(args.data) != GERMAN_CSV:
            raise UsageError("--schema is required with a custom --data file")
        schema = GERMAN_SCHEMA
    if args.trees < 1:
        raise UsageError("--trees must be >= 1")
    return harness.reference_setup(args.data, schema, trees=args.trees, seed=args.model_seed,
                                   reference=args.reference, blackbox=args.blackbox, timeout=args.timeout)


def _indices(args, setup) -> list[int]:
    try:
        return harness.parse_instances(args.instances, len(setup.test))
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _jobs(args) -> int:
    return args.jobs if args.blackbox == harness.BUILTIN_ENSEMBLE else 1


@contextmanager
def _sink(path):
    if path is None:
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            yield fh


def cmd_explain(args, setup: harness.Setup) -> None:
    results = harness.run_method(setup, args.method, _indices(args, setup), _params(args), args.seed, _jobs(args))
    target = setup.target
    with _sink(args.output) as out:
        for (rec, e) in results:
            if args.format == "structured":
                doc = e.to_dict(target)
                doc["index"] = rec.index
                doc["method"] = args.method
                out.write(harness.dumps(doc) + "\n")
                continue
            out.write(f"# test instance {rec.index} ({args.method})\n")
            out.write(f"x = {e.instance}\n")
            out.write(f"b(x) = {e.blackbox_label}\n")
            out.write(e.render(target) + "\n")
            d = e.diagnostics
            out.write(f"fidelity = {d['fidelity']:.4f}, tree depth = {d['tree_depth']}, "
                      f"leaves = {d['tree_leaves']}\n")
            if args.dump_tree:
                out.write(e.tree.dump() + "\n")
            out.write("\n")


def _evaluate(args, setup, method: str) -> dict:
    results = harness.run_method(setup, method, _indices(args, setup), _params(args), args.seed, _jobs(args))
    return harness.evaluation_report(method, [r for r, _ in results], args.seed)


def _write_report(args, reports: list[dict], table: str) -> None:
    if args.output is not None:
        # the structured report goes to --output, per-instance rows to a sibling CSV
        base = Path(args.output)
        doc = reports[0] if len(reports) == 1 else {"methods": reports}
        base.write_text(harness.dumps(doc) + "\n", encoding="utf-8")
        for rep in reports:
            suffix = ".csv" if len(reports) == 1 else f".{rep['method']}.csv"
            records = [EvalRecord(**r) for r in rep["records"]]
            base.with_suffix(suffix).write_text(harness.records_csv(records), encoding="utf-8")
    if args.format == "structured":
        doc = reports[0] if len(reports) == 1 else {"methods": reports}
        sys.stdout.write(harness.dumps(doc) + "\n")
    else:
        sys.stdout.write(table)


def cmd_evaluate(args, setup) -> None:
    rep = _evaluate(args, setup, args.method)
    records = [EvalRecord(**r) for r in rep["records"]]
    table = harness.records_csv(records) + "\n" + harness.comparison_table([rep])
    _write_report(args, [rep], table)


def cmd_compare(args, setup) -> None:
    methods = [m.strip() for m in args.method.split(",") if m.strip()]
    bad = [m for m in methods if m not in METHODS]
    if bad or not methods:
        raise UsageError(f"unknown method(s) {bad}; choose from {', '.join(METHODS)}")
    reports = [_evaluate(args, setup, m) for m in methods]
    _write_report(args, reports, harness.comparison_table(reports))


def cmd_neighborhood(args, setup) -> None:
    idx = _indices(args, setup)
    if len(idx) != 1:
        raise UsageError("neighborhood dumps exactly one instance; pass a single --instances index")
    _, e = harness.run_method(setup, args.method, idx, _params(args), args.seed)[0]
    with _sink(args.output) as out:
        out.write(harness.neighborhood_csv(setup, e))
    stats = e.neighborhood.stats(setup.schema)
    print(harness.dumps(stats), file=sys.stderr)


COMMANDS = {"explain": cmd_explain, "evaluate": cmd_evaluate, "compare": cmd_compare,
            "neighborhood": cmd_neighborhood}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    setup = None
    try:
        setup = _setup(args)
        COMMANDS[args.command](args, setup)
    except UsageError as exc:
        print(f"localrules: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, FileNotFoundError) as exc:
        print(f"localrules: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except BlackBoxError as exc:
        print(f"localrules: black-box error: {exc}", file=sys.stderr)
        return EXIT_BLACKBOX
    finally:
        if setup is not None:
            setup.blackbox.close()
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
