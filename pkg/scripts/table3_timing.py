"""Wall time and median MMF of Heuristic, 2S-SRGR and exhaustive search on small cells.

    python scripts/table3_timing.py --B 4 8 --trials 50
"""

import argparse
import json
import time
from pathlib import Path

import numpy as np

from fdsched.experiments import percentile, trial_seed
from fdsched.oracle import enumerate_optimal
from fdsched.power import uniform_power
from fdsched.scenario import ScenarioSpec, generate_instance
from fdsched.schedulers import heuristic_schedule, solve_2s_srgr

METHODS = {
    "heuristic": lambda inst, pw: heuristic_schedule(inst, pw).mmf_value,
    "2s-srgr": lambda inst, pw: solve_2s_srgr(inst, pw).mmf_value,
    "oracle": lambda inst, pw: enumerate_optimal(inst, pw)[1],
}


def time_methods(M, B, T, trials, seed):
    """Per-method wall times (s) and MMF values over ``trials`` seeded cells."""
    walls = {m: [] for m in METHODS}
    mmf = {m: [] for m in METHODS}
    for k in range(trials):
        inst = generate_instance(ScenarioSpec(M=M, B=B, T=T, seed=trial_seed(seed, k)))
        powers = uniform_power(inst.config)
        for name, fn in METHODS.items():
            started = time.perf_counter()
            value = fn(inst, powers)
            walls[name].append(time.perf_counter() - started)
            mmf[name].append(value)
    return walls, mmf


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--M", type=int, default=4)
    ap.add_argument("--B", type=int, nargs="+", default=[4, 8])
    ap.add_argument("--T", type=int, default=10)
    ap.add_argument("--trials", type=int, default=50)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", type=Path, default=Path("results/table3"))
    args = ap.parse_args()

    table = {}
    for B in args.B:
        walls, mmf = time_methods(args.M, B, args.T, args.trials, args.seed)
        table[B] = {m: {"mean_wall_s": float(np.mean(walls[m])), "p50_mmf": percentile(mmf[m], 50)}
                    for m in METHODS}
        for m, row in table[B].items():
            print(f"B={B:<3} {m:>10}  {row['mean_wall_s']:9.4f} s  p50 {row['p50_mmf']:.4f}",
                  flush=True)
    args.out.mkdir(parents=True, exist_ok=True)
    (args.out / "timing.json").write_text(json.dumps(table, indent=2) + "\n")


if __name__ == "__main__":
    main()
