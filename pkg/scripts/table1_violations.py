"""Constraint-violation rates of the relaxation schedulers at M=8 as B grows.

    python scripts/table1_violations.py --trials 200 --out results/table1
"""

import argparse
import json
from pathlib import Path

from fdsched.experiments import export, run_experiment, summarize
from fdsched.scenario import ScenarioSpec

SCHEDULERS = ["sr", "2s-sr", "2s-srgr", "2s-irmgr"]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--M", type=int, default=8)
    ap.add_argument("--B", type=int, nargs="+", default=[4, 8, 16, 32, 64])
    ap.add_argument("--T", type=int, default=10)
    ap.add_argument("--trials", type=int, default=50)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--out", type=Path, default=Path("results/table1"))
    args = ap.parse_args()

    table = {}
    print(f"{'B':>4} " + " ".join(f"{s + ' hd':>12} {s + ' pair':>14}" for s in SCHEDULERS))
    for B in args.B:
        spec = ScenarioSpec(M=args.M, B=B, T=args.T, seed=args.seed)
        records = run_experiment(spec, SCHEDULERS, num_trials=args.trials, jobs=args.jobs)
        summary = summarize(records)
        export(summary, records, args.out / f"B{B}")
        table[B] = {s: summary.schedulers[s].violation for s in SCHEDULERS}
        print(f"{B:>4} " + " ".join(f"{table[B][s]['hd']:>12.1%} {table[B][s]['pairing']:>14.1%}"
                                   for s in SCHEDULERS), flush=True)
    (args.out / "violations.json").write_text(json.dumps(table, indent=2) + "\n")


if __name__ == "__main__":
    main()
