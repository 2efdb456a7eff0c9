"""Command-line entry point: ``python -m moo_kserver <command> ...``.

Exit codes: 0 success, 1 usage error (bad arguments, unreadable files),
2 infeasible instance (inputs that parse but do not form a valid problem).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import harness
from .domain import DistanceFunction, NodeSpace, load_distance_table, make_config
from .miner import build_tree, classify, extract_cases, format_cases, format_tree, load_cases, load_tree
from .offline import format_trace, optimum_flow
from .policies import POLICIES, MOOPolicy, run_policy
from .streamgen import StreamSpec, format_matrix, format_stream, gen_matrix, gen_stream, load_matrix, load_stream


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None


def _write(path: str | None, text: str) -> None:
    if path in (None, "-"):
        sys.stdout.write(text)
        return
    try:
        Path(path).write_text(text)
    except OSError as exc:
        raise UsageError(f"cannot write {path}: {exc.strerror}") from None


def _distance(arg: str) -> DistanceFunction:
    if arg.startswith("table:"):
        return load_distance_table(_read(arg[6:]))
    return DistanceFunction(arg)


def _nodes(arg: str) -> list[int]:
    return [int(v) for v in arg.replace(",", " ").split()]


def _instance(args):
    space = NodeSpace.parse(args.space)
    dist = _distance(args.distance)
    start = make_config(_nodes(args.start), space)
    stream = load_stream(_read(args.stream), space.n)
    return space, dist, sorted(start), stream


def cmd_gen_matrix(args):
    _write(args.out, format_matrix(gen_matrix(args.n, args.density, args.seed, args.irreducible)))


def cmd_gen_stream(args):
    mats = [load_matrix(_read(args.matrix))]
    if args.matrix2:
        mats.append(load_matrix(_read(args.matrix2)))
    spec = StreamSpec(tuple(mats), args.length, args.seed, args.block, args.initial)
    _write(args.out, format_stream(gen_stream(spec)))


def cmd_solve_offline(args):
    space, dist, start, stream = _instance(args)
    trace = optimum_flow(space, dist, start, stream)
    _write(args.out, format_trace(trace))
    if args.cases_out:
        _write(args.cases_out, format_cases(extract_cases(stream, start, trace, space.n)))


def cmd_mine(args):
    table = load_cases(_read(args.cases))
    tree = build_tree(table, args.min_cases, args.confidence, prune=not args.no_prune)
    _write(args.out, format_tree(tree))


def cmd_classify(args):
    tree = load_tree(_read(args.tree))
    config = make_config(_nodes(args.config))
    print(classify(tree, args.request, config))


def cmd_run_policy(args):
    space, dist, start, stream = _instance(args)
    if args.policy == "moo":
        if not args.tree:
            raise UsageError("--policy moo needs --tree")
        policy = MOOPolicy(load_tree(_read(args.tree)))
    elif args.policy == "harmonic":
        policy = POLICIES["harmonic"](args.seed)
    else:
        policy = POLICIES[args.policy]()
    res = run_policy(policy, space, dist, start, stream)
    lines = [f"{d.request} {d.source} {d.cost}" for d in res.decisions]
    lines.append(f"total {res.total_cost}")
    lines.append(f"invalid {res.invalid_count}")
    _write(args.out, "\n".join(lines) + "\n")


def cmd_experiment(args):
    spec = harness.parse_spec_file(_read(args.spec), Path(args.spec).parent)
    report = harness.run_experiment(spec, args.workers)
    text = harness.report_csv(report) if args.format == "csv" else harness.report_table(report)
    _write(args.out, text)


def cmd_sweep(args):
    spec = harness.parse_spec_file(_read(args.spec), Path(args.spec).parent)
    results = harness.sweep(spec, args.param, _nodes(args.values), args.workers)
    _write(args.out, harness.sweep_csv(args.param, results))


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="moo-kserver", description="k-server experiments by mining the offline optimum")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    c = sub.add_parser("gen-matrix", help="random sparse/dense transition matrix")
    c.add_argument("--n", type=int, required=True)
    c.add_argument("--density", choices=("sparse", "dense"), required=True)
    c.add_argument("--seed", type=int, required=True)
    c.add_argument("--irreducible", action="store_true", help="guarantee every node reaches every other")
    c.add_argument("--out")
    c.set_defaults(func=cmd_gen_matrix)

    c = sub.add_parser("gen-stream", help="sample a request stream from one or two matrices")
    c.add_argument("--matrix", required=True)
    c.add_argument("--matrix2")
    c.add_argument("--block", type=int, default=10)
    c.add_argument("--length", type=int, required=True)
    c.add_argument("--seed", type=int, required=True)
    c.add_argument("--initial", type=int, default=0)
    c.add_argument("--out")
    c.set_defaults(func=cmd_gen_stream)

    def instance_args(c):
        c.add_argument("--space", required=True, help="line:N or grid:WxH")
        c.add_argument("--distance", required=True, help="distance kind or table:<file>")
        c.add_argument("--start", required=True, help="comma-separated starting nodes")
        c.add_argument("--stream", required=True, help="stream file")

    c = sub.add_parser("solve-offline", help="offline optimum of a stream")
    instance_args(c)
    c.add_argument("--out")
    c.add_argument("--cases-out", help="also write the optimum as a case file")
    c.set_defaults(func=cmd_solve_offline)

    c = sub.add_parser("mine", help="build a decision tree from a case file")
    c.add_argument("--cases", required=True)
    c.add_argument("--out")
    c.add_argument("--min-cases", type=int, default=2)
    c.add_argument("--confidence", type=float, default=0.25)
    c.add_argument("--no-prune", action="store_true")
    c.set_defaults(func=cmd_mine)

    c = sub.add_parser("classify", help="classify one request against a configuration")
    c.add_argument("--tree", required=True)
    c.add_argument("--request", type=int, required=True)
    c.add_argument("--config", required=True)
    c.set_defaults(func=cmd_classify)

    c = sub.add_parser("run-policy", help="serve a stream online with one policy")
    c.add_argument("--policy", choices=("greedy", "balance", "harmonic", "moo"), required=True)
    c.add_argument("--tree")
    instance_args(c)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--out")
    c.set_defaults(func=cmd_run_policy)

    c = sub.add_parser("experiment", help="run an experiment spec file and report")
    c.add_argument("--spec", required=True)
    c.add_argument("--out")
    c.add_argument("--format", choices=("csv", "table"), default="csv")
    c.add_argument("--workers", type=int, default=1)
    c.set_defaults(func=cmd_experiment)

    c = sub.add_parser("sweep", help="repeat an experiment over k or n")
    c.add_argument("--spec", required=True)
    c.add_argument("--param", choices=("k", "n"), required=True)
    c.add_argument("--values", required=True, help="comma-separated values")
    c.add_argument("--out")
    c.add_argument("--workers", type=int, default=1)
    c.set_defaults(func=cmd_sweep)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"infeasible instance: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
