"""Infeasibility of the greedy-rounding schedulers at full load (M = 2B).

    python scripts/table2_full_load.py --trials 50 --out results/table2
"""

import argparse
import json
from pathlib import Path

from fdsched.experiments import export, run_experiment, summarize
from fdsched.scenario import ScenarioSpec

SCHEDULERS = ["2s-srgr", "2s-irmgr"]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--B", type=int, nargs="+", default=[2, 3, 4, 5, 6, 7, 8])
    ap.add_argument("--T", type=int, default=10)
    ap.add_argument("--trials", type=int, default=50)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--out", type=Path, default=Path("results/table2"))
    args = ap.parse_args()

    table = {}
    print(f"{'B':>4} " + " ".join(f"{s:>10}" for s in SCHEDULERS))
    for B in args.B:
        spec = ScenarioSpec(M=2 * B, B=B, T=args.T, seed=args.seed)
        records = run_experiment(spec, SCHEDULERS, num_trials=args.trials, jobs=args.jobs)
        summary = summarize(records)
        export(summary, records, args.out / f"B{B}")
        table[B] = {s: 1.0 - summary.schedulers[s].feasible for s in SCHEDULERS}
        print(f"{B:>4} " + " ".join(f"{table[B][s]:>10.1%}" for s in SCHEDULERS), flush=True)
    (args.out / "infeasibility.json").write_text(json.dumps(table, indent=2) + "\n")


if __name__ == "__main__":
    main()
