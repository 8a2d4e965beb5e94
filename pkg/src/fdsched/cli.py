"""Command-line entry point: ``run``, ``oracle`` and ``reduce``.

Exit codes: 0 on success, 1 on usage errors, 2 on runtime failures.
"""

from __future__ import annotations

import argparse
import ast
import os
import sys
from pathlib import Path

from .experiments import export, run_experiment, summarize
from .power import uniform_power
from .scenario import ScenarioSpec, ThreeDMInstance, build_reduction_instance, generate_instance
from .schedulers import SCHEDULERS, solve_stage1


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _scheduler_list(text: str) -> list[str]:
    names = [s.strip() for s in text.split(",") if s.strip()]
    unknown = [s for s in names if s not in SCHEDULERS]
    if not names or unknown:
        raise argparse.ArgumentTypeError(
            f"unknown scheduler(s) {unknown}; choose from {', '.join(SCHEDULERS)}")
    return names


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fdsched", description="Full-duplex OFDMA scheduling experiments.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="Monte-Carlo trials with CSV/JSON/SVG export")
    run.add_argument("--config", required=True, type=Path,
                     help="JSON scenario file (ScenarioSpec fields)")
    run.add_argument("--schedulers", type=_scheduler_list, default=list(SCHEDULERS))
    run.add_argument("--power", choices=("uniform", "sca"), default="uniform")
    run.add_argument("--trials", type=int, default=50)
    run.add_argument("--seed", type=int, default=None,
                     help="master seed (defaults to the config's seed)")
    run.add_argument("--out", type=Path, default=Path("out"))
    run.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    run.add_argument("--timing", action="store_true",
                     help="record wall times (makes records.csv run-dependent)")

    orc = sub.add_parser("oracle", help="exact solve of one small instance with bounds")
    orc.add_argument("--config", required=True, type=Path)
    orc.add_argument("--seed", type=int, default=None)

    red = sub.add_parser("reduce", help="3-dimensional-matching reduction check")
    red.add_argument("--k", type=int, required=True)
    red.add_argument("--triples", required=True,
                     help="file or literal set of 1-based triples, e.g. '{(1,1,1)}'")
    return parser


def _load_spec(path: Path, seed) -> ScenarioSpec:
    spec = ScenarioSpec.load(path)
    return spec if seed is None else spec.replace(seed=seed)


def _parse_triples(text: str) -> set:
    path = Path(text)
    if path.is_file():
        text = path.read_text()
    text = text.strip()
    if text in ("{}", "set()", ""):
        return set()
    value = ast.literal_eval(text)
    if isinstance(value, tuple) and len(value) == 3 and all(isinstance(v, int) for v in value):
        value = {value}
    return {tuple(t) for t in value}


def cmd_run(args) -> int:
    if args.trials < 0 or args.jobs < 1:
        raise UsageError("--trials must be >= 0 and --jobs >= 1")
    spec = _load_spec(args.config, args.seed)
    records = run_experiment(spec, args.schedulers, args.power, args.trials, jobs=args.jobs,
                             timing=args.timing)
    summary = summarize(records)
    export(summary, records, args.out)
    for name, s in summary.schedulers.items():
        print(f"{name:10s} feasible {s.feasible:6.1%}  hd-viol {s.violation['hd']:6.1%}  "
              f"pairing-viol {s.violation['pairing']:6.1%}  p50 {s.p50:.4g}  p80 {s.p80:.4g}")
    print(f"wrote {args.out}")
    return 0


def cmd_oracle(args) -> int:
    from .oracle import enumerate_optimal

    spec = _load_spec(args.config, args.seed)
    instance = generate_instance(spec)
    powers = uniform_power(instance.config)
    bound = solve_stage1(instance, powers).objective_value
    _, best = enumerate_optimal(instance, powers)
    print(f"lp bound  {bound:.6g}")
    print(f"optimum   {best:.6g}")
    ok = bound >= best - 1e-6
    for name, fn in SCHEDULERS.items():
        value = fn(instance, powers).mmf_value
        ok &= value <= best + 1e-9
        print(f"{name:10s}{value:.6g}")
    print(f"sandwich holds: {'true' if ok else 'false'}")
    return 0


def cmd_reduce(args) -> int:
    from .oracle import check_decision_feasibility

    tdm = ThreeDMInstance(args.k, frozenset(_parse_triples(args.triples)))
    instance, tau = build_reduction_instance(tdm)
    feasible = check_decision_feasibility(instance, tau)
    match = tdm.has_perfect_match()
    yn = {True: "true", False: "false"}
    print(f"feasible: {yn[feasible]}, 3dm-match: {yn[match]}, agree: {yn[feasible == match]}")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    handlers = {"run": cmd_run, "oracle": cmd_oracle, "reduce": cmd_reduce}
    try:
        return handlers[args.command](args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"fdsched: error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:
        print(f"fdsched: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
