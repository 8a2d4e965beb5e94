"""MMF-rate CDFs and 50th/80th percentiles under uniform and SCA power.

    python scripts/mmf_percentiles.py --M 8 --B 4 16 64 --trials 50 --out results/mmf
"""

import argparse
import json
from pathlib import Path

from fdsched.experiments import export, run_experiment, summarize
from fdsched.scenario import ScenarioSpec


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--M", type=int, default=8)
    ap.add_argument("--B", type=int, nargs="+", default=[4, 8, 16, 32, 64])
    ap.add_argument("--T", type=int, default=10)
    ap.add_argument("--trials", type=int, default=50)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--schedulers", default="2s-sr,2s-srgr,heuristic")
    ap.add_argument("--power", nargs="+", default=["uniform", "sca"])
    ap.add_argument("--out", type=Path, default=Path("results/mmf"))
    args = ap.parse_args()

    names = args.schedulers.split(",")
    table = {}
    for power in args.power:
        for B in args.B:
            spec = ScenarioSpec(M=args.M, B=B, T=args.T, seed=args.seed)
            records = run_experiment(spec, names, power, args.trials, jobs=args.jobs)
            summary = summarize(records)
            export(summary, records, args.out / f"{power}_B{B}")
            table[f"{power}/B{B}"] = {n: {"p50": s.p50, "p80": s.p80}
                                      for n, s in summary.schedulers.items()}
            cells = "  ".join(f"{n} {s.p50:.3f}/{s.p80:.3f}"
                              for n, s in summary.schedulers.items())
            print(f"{power:>7} B={B:<3} p50/p80  {cells}", flush=True)
    (args.out / "percentiles.json").write_text(json.dumps(table, indent=2) + "\n")


if __name__ == "__main__":
    main()
