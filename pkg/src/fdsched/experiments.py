"""Monte-Carlo trial runner, aggregation and file export.

Every trial draws its own instance from a seed derived from the master seed
and the trial index, so trials are independent of execution order and of the
number of worker processes.  Wall-clock times are only recorded when asked
for; otherwise the CSV holds ``nan`` there and is byte-for-byte reproducible.
"""

from __future__ import annotations

import csv
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .model import mmf_objective
from .power import ScaParams, sca_power_profile, uniform_power
from .scenario import ScenarioSpec, generate_instance
from .schedulers import SCHEDULERS, solve_stage1

CSV_COLUMNS = ["trial", "seed", "scheduler", "mmf", "ofdma_ok", "hd_ok", "pairing_ok",
               "wall_ms", "lp_solves", "sca_iters"]
_SHARES_STAGE1 = ("sr", "2s-sr", "2s-srgr")


def trial_seed(master: int, trial: int) -> int:
    """Per-trial seed; a pure function of ``(master, trial)``."""
    state = np.random.SeedSequence([int(master), int(trial)]).generate_state(1, np.uint64)
    return int(state[0])


@dataclass
class Outcome:
    scheduler: str
    mmf: float
    ofdma_ok: bool
    hd_ok: bool
    pairing_ok: bool
    wall_ms: float = math.nan
    lp_solves: int = 0
    sca_iters: int = 0
    error: str | None = None

    @property
    def feasible(self) -> bool:
        return self.ofdma_ok and self.hd_ok and self.pairing_ok

    @property
    def scored_mmf(self) -> float:
        """MMF with infeasible or failed runs counted as zero."""
        return self.mmf if self.feasible and self.error is None else 0.0


@dataclass
class TrialRecord:
    trial: int
    seed: int
    outcomes: dict = field(default_factory=dict)   # scheduler name -> Outcome


@dataclass(frozen=True)
class RunOptions:
    schedulers: tuple = ("sr", "2s-sr", "2s-srgr", "2s-irmgr", "heuristic")
    power_mode: str = "uniform"
    timing: bool = False
    sca: ScaParams = ScaParams()

    def __post_init__(self):
        unknown = [s for s in self.schedulers if s not in SCHEDULERS]
        if unknown:
            raise ValueError(f"unknown schedulers: {unknown}")
        if self.power_mode not in ("uniform", "sca"):
            raise ValueError("power_mode must be 'uniform' or 'sca'")


def run_trial(spec: ScenarioSpec, trial: int, options: RunOptions) -> TrialRecord:
    seed = trial_seed(spec.seed, trial)
    instance = generate_instance(spec.replace(seed=seed))
    powers = uniform_power(instance.config)
    record = TrialRecord(trial, seed)
    # sharing the stage-one LP would hide its cost from the timings
    stage1 = None
    if not options.timing and sum(s in _SHARES_STAGE1 for s in options.schedulers) > 1:
        stage1 = solve_stage1(instance, powers)
    for name in options.schedulers:
        kwargs = {"stage1": stage1} if stage1 is not None and name in _SHARES_STAGE1 else {}
        started = time.perf_counter()
        try:
            res = SCHEDULERS[name](instance, powers, **kwargs)
        except Exception as exc:  # recorded, never aborts the batch
            record.outcomes[name] = Outcome(name, math.nan, False, False, False,
                                            error=f"{type(exc).__name__}: {exc}")
            continue
        rep = res.report
        out = Outcome(name, res.mmf_value, rep.ofdma_ok, rep.hd_ok, rep.pairing_ok,
                      lp_solves=int(res.diagnostics.get("lp_solves", 0)))
        if options.power_mode == "sca" and rep.feasible:
            profile, info = sca_power_profile(instance, res.schedule, options.sca)
            out.mmf = mmf_objective(res.schedule, instance, profile)
            out.sca_iters = info["sca_iters"]
        if options.timing:
            out.wall_ms = 1e3 * (time.perf_counter() - started)
        record.outcomes[name] = out
    return record


def _run_one(args):
    return run_trial(*args)


def run_experiment(spec: ScenarioSpec, schedulers=None, power_mode: str = "uniform",
                   num_trials: int = 50, *, jobs: int = 1, timing: bool = False,
                   sca: ScaParams | None = None) -> list[TrialRecord]:
    """Run ``num_trials`` trials; records come back sorted by trial index."""
    options = RunOptions(tuple(schedulers or RunOptions.schedulers), power_mode, timing,
                         sca or ScaParams())
    tasks = [(spec, k, options) for k in range(num_trials)]
    if jobs <= 1 or num_trials <= 1:
        records = [_run_one(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            records = list(pool.map(_run_one, tasks))
    return sorted(records, key=lambda r: r.trial)


# ---------------------------------------------------------------------------
# aggregation


@dataclass
class SchedulerSummary:
    trials: int
    violation: dict            # family -> fraction of trials violating it
    feasible: float
    errors: int
    cdf_x: list                # sorted scored MMF values
    cdf_y: list                # empirical CDF at cdf_x
    p50: float
    p80: float
    mean_wall_ms: float
    median_wall_ms: float
    mean_lp_solves: float

    def cdf(self, x: float) -> float:
        """Fraction of trials with scored MMF <= x."""
        return float(np.searchsorted(self.cdf_x, x, side="right")) / self.trials


@dataclass
class Summary:
    schedulers: dict = field(default_factory=dict)   # name -> SchedulerSummary

    def to_dict(self) -> dict:
        return {name: asdict(s) for name, s in self.schedulers.items()}


def percentile(values, q: float) -> float:
    """Linear interpolation between order statistics (numpy's default rule).

    The q-th percentile of n sorted values sits at position (n - 1) q / 100.
    """
    return float(np.percentile(np.asarray(values, float), q))


def summarize(records: list[TrialRecord]) -> Summary:
    summary = Summary()
    if not records:
        return summary
    names = list(records[0].outcomes)
    for name in names:
        outs = [r.outcomes[name] for r in records]
        n = len(outs)
        scored = np.sort([o.scored_mmf for o in outs])
        viol = {
            "ofdma": sum(not o.ofdma_ok for o in outs) / n,
            "hd": sum(not o.hd_ok for o in outs) / n,
            "pairing": sum(not o.pairing_ok for o in outs) / n,
        }
        walls = [o.wall_ms for o in outs]
        summary.schedulers[name] = SchedulerSummary(
            trials=n,
            violation=viol,
            feasible=sum(o.feasible for o in outs) / n,
            errors=sum(o.error is not None for o in outs),
            cdf_x=scored.tolist(),
            cdf_y=(np.arange(1, n + 1) / n).tolist(),
            p50=percentile(scored, 50),
            p80=percentile(scored, 80),
            mean_wall_ms=float(np.mean(walls)),
            median_wall_ms=float(np.median(walls)),
            mean_lp_solves=float(np.mean([o.lp_solves for o in outs])),
        )
    return summary


# ---------------------------------------------------------------------------
# export


def _num(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return f"{float(v):.6g}"


def _round_floats(obj):
    if isinstance(obj, float):
        return float(f"{obj:.6g}") if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {k: _round_floats(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_round_floats(v) for v in obj]
    return obj


def write_records_csv(records: list[TrialRecord], path: Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for rec in records:
            for name, o in rec.outcomes.items():
                writer.writerow([rec.trial, rec.seed, name, _num(o.mmf), _num(o.ofdma_ok),
                                 _num(o.hd_ok), _num(o.pairing_ok), _num(o.wall_ms),
                                 o.lp_solves, o.sca_iters])


def read_records_csv(path: str | Path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def cdf_svg(xs, ys, title: str, width: int = 400, height: int = 300) -> str:
    """Step-function CDF as a bare SVG polyline with a frame and axis ticks."""
    pad = 40
    x_max = max(max(xs, default=0.0), 1e-9)
    sx = (width - 2 * pad) / x_max
    sy = height - 2 * pad

    def pt(x, y):
        return f"{pad + x * sx:.2f},{height - pad - y * sy:.2f}"

    pts = [pt(0.0, 0.0)]
    prev = 0.0
    for x, y in zip(xs, ys):
        pts += [pt(x, prev), pt(x, y)]
        prev = y
    pts.append(pt(x_max, prev))
    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<rect x="{pad}" y="{pad}" width="{width - 2 * pad}" height="{sy}" '
        'fill="none" stroke="#888"/>',
        f'<polyline fill="none" stroke="#1f4e9c" stroke-width="1.5" points="{" ".join(pts)}"/>',
        f'<text x="{width / 2}" y="{pad / 2}" text-anchor="middle" font-size="13">{title}</text>',
        f'<text x="{pad}" y="{height - pad / 3}" font-size="11">0</text>',
        f'<text x="{width - pad}" y="{height - pad / 3}" text-anchor="end" '
        f'font-size="11">{x_max:.3g} bit/s/Hz</text>',
        f'<text x="{pad / 4}" y="{pad + 4}" font-size="11">1</text>',
        "</svg>",
    ]
    return "\n".join(lines) + "\n"


def export(summary: Summary, records: list[TrialRecord], out_dir: str | Path) -> list[Path]:
    """Write ``records.csv``, ``summary.json`` and one CDF plot per scheduler."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        written = [out / "records.csv", out / "summary.json"]
        write_records_csv(records, written[0])
        written[1].write_text(json.dumps(_round_floats(summary.to_dict()), indent=2,
                                         sort_keys=True) + "\n")
        for name, s in summary.schedulers.items():
            path = out / f"cdf_{name}.svg"
            path.write_text(cdf_svg(s.cdf_x, s.cdf_y, f"CDF of MMF rate, {name}"))
            written.append(path)
    except OSError as exc:
        raise OSError(f"cannot write experiment output under {out}: {exc}") from exc
    return written
