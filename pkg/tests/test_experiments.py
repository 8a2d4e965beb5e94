import json
import math

import numpy as np
import pytest

from fdsched.experiments import (CSV_COLUMNS, Outcome, TrialRecord, cdf_svg, export,
                                 percentile, read_records_csv, run_experiment, summarize,
                                 trial_seed)
from fdsched.scenario import ScenarioSpec

SPEC = ScenarioSpec(M=4, B=2, T=2, seed=5)


def _records(values, feasible):
    recs = []
    for k, (v, ok) in enumerate(zip(values, feasible)):
        recs.append(TrialRecord(k, k, {"a": Outcome("a", v, True, True, ok)}))
    return recs


def test_trial_seed_is_pure():
    assert trial_seed(1, 2) == trial_seed(1, 2)
    assert len({trial_seed(1, k) for k in range(100)}) == 100
    assert trial_seed(1, 0) != trial_seed(2, 0)


def test_zero_trials():
    assert run_experiment(SPEC, ["heuristic"], num_trials=0) == []
    assert summarize([]).schedulers == {}


def test_records_complete_and_deterministic(tmp_path):
    a = run_experiment(SPEC, ["2s-srgr", "heuristic"], num_trials=3)
    b = run_experiment(SPEC, ["2s-srgr", "heuristic"], num_trials=3)
    assert [r.trial for r in a] == [0, 1, 2]
    assert all(set(r.outcomes) == {"2s-srgr", "heuristic"} for r in a)
    export(summarize(a), a, tmp_path / "a")
    export(summarize(b), b, tmp_path / "b")
    for name in ("records.csv", "summary.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_parallel_matches_serial(tmp_path):
    serial = run_experiment(SPEC, ["sr", "2s-sr"], num_trials=4, jobs=1)
    parallel = run_experiment(SPEC, ["sr", "2s-sr"], num_trials=4, jobs=2)
    export(summarize(serial), serial, tmp_path / "s")
    export(summarize(parallel), parallel, tmp_path / "p")
    assert (tmp_path / "s" / "records.csv").read_bytes() == \
        (tmp_path / "p" / "records.csv").read_bytes()


def test_scheduler_failure_is_recorded(monkeypatch):
    import fdsched.experiments as ex

    def boom(instance, powers, **kw):
        raise RuntimeError("solver exploded")

    monkeypatch.setitem(ex.SCHEDULERS, "heuristic", boom)
    recs = run_experiment(SPEC, ["heuristic", "2s-sr"], num_trials=2)
    for r in recs:
        out = r.outcomes["heuristic"]
        assert out.error.startswith("RuntimeError") and out.scored_mmf == 0.0
        assert r.outcomes["2s-sr"].error is None
    assert summarize(recs).schedulers["heuristic"].errors == 2


def test_sca_mode_never_lowers_mmf():
    uni = run_experiment(SPEC, ["2s-srgr"], "uniform", 2)
    sca = run_experiment(SPEC, ["2s-srgr"], "sca", 2)
    for u, s in zip(uni, sca):
        assert s.outcomes["2s-srgr"].mmf >= u.outcomes["2s-srgr"].mmf - 1e-12
        if s.outcomes["2s-srgr"].feasible:
            assert s.outcomes["2s-srgr"].sca_iters >= 1


def test_timing_opt_in():
    plain = run_experiment(SPEC, ["heuristic"], num_trials=1)
    timed = run_experiment(SPEC, ["heuristic"], num_trials=1, timing=True)
    assert math.isnan(plain[0].outcomes["heuristic"].wall_ms)
    assert timed[0].outcomes["heuristic"].wall_ms > 0


def test_bad_options():
    with pytest.raises(ValueError):
        run_experiment(SPEC, ["nope"], num_trials=1)
    with pytest.raises(ValueError):
        run_experiment(SPEC, ["sr"], power_mode="max", num_trials=1)


def test_summary_examples():
    s = summarize(_records([1.0, 2.0, 3.0], [True] * 3)).schedulers["a"]
    assert s.p50 == 2.0
    s = summarize(_records([1.0] * 100, [False] * 45 + [True] * 55)).schedulers["a"]
    assert s.cdf(0.0) == pytest.approx(0.45)
    assert s.violation["pairing"] + s.feasible == pytest.approx(1.0)


def test_percentile_rule():
    # 80 copies of 0.1 and 20 of 4.16: the 80th percentile sits at position
    # 0.8 * 99 = 79.2, between the last 0.1 and the first 4.16
    values = [0.1] * 80 + [4.16] * 20
    assert percentile(values, 80) == pytest.approx(0.1 + 0.2 * 4.06)
    assert percentile(values, 79) == pytest.approx(0.1)


def test_cdf_and_percentile_order():
    rng = np.random.default_rng(0)
    recs = _records(rng.exponential(size=30).tolist(), (rng.uniform(size=30) > 0.2).tolist())
    s = summarize(recs).schedulers["a"]
    assert np.all(np.diff(s.cdf_y) > 0) and s.cdf_y[-1] == 1.0
    assert np.all(np.diff(s.cdf_x) >= 0)
    assert s.p50 <= s.p80


def test_export_files_and_roundtrip(tmp_path):
    recs = run_experiment(SPEC, ["2s-srgr", "heuristic"], num_trials=2)
    files = export(summarize(recs), recs, tmp_path)
    assert {p.name for p in files} == {"records.csv", "summary.json", "cdf_2s-srgr.svg",
                                       "cdf_heuristic.svg"}
    rows = read_records_csv(tmp_path / "records.csv")
    assert list(rows[0]) == CSV_COLUMNS and len(rows) == 4
    for row in rows:
        rec = recs[int(row["trial"])].outcomes[row["scheduler"]]
        assert float(row["mmf"]) == pytest.approx(rec.mmf, rel=5e-6)
        assert all(row[c] != "" for c in CSV_COLUMNS)
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert set(summary["heuristic"]) >= {"violation", "feasible", "p50", "p80", "cdf_x", "cdf_y",
                                         "mean_wall_ms"}
    assert summary["heuristic"]["mean_wall_ms"] is None
    assert (tmp_path / "cdf_heuristic.svg").read_text().startswith("<svg")


def test_export_empty_and_single(tmp_path):
    export(summarize([]), [], tmp_path / "e")
    assert (tmp_path / "e" / "records.csv").read_text() == ",".join(CSV_COLUMNS) + "\n"
    one = run_experiment(SPEC, ["heuristic"], num_trials=1)
    export(summarize(one), one, tmp_path / "o")
    assert len(read_records_csv(tmp_path / "o" / "records.csv")) == 1


def test_export_error_has_path(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(OSError, match="file"):
        export(summarize([]), [], blocker / "sub")


def test_svg_is_well_formed():
    import xml.etree.ElementTree as ET

    root = ET.fromstring(cdf_svg([0.5, 1.0, 2.0], [1 / 3, 2 / 3, 1.0], "t"))
    assert root.tag.endswith("svg")
