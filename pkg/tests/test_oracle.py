import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fdsched.lp import LpProblem, LpStatus, solve_lp
from fdsched.model import Schedule, check_schedule, mmf_objective
from fdsched.oracle import (check_decision_feasibility, count_schedules, enumerate_optimal,
                            grid_power_oracle)
from fdsched.power import uniform_power
from fdsched.scenario import (ScenarioSpec, ThreeDMInstance, build_reduction_instance,
                              generate_instance)
from fdsched.schedulers import SCHEDULERS, solve_stage1


def _cell(M, B, T=1, seed=0):
    inst = generate_instance(ScenarioSpec(M=M, B=B, T=T, seed=seed))
    return inst, uniform_power(inst.config)


def _all_schedules(M, B):
    """Independent route: every binary alpha with both sides present, every pair per RB."""
    for alpha in itertools.product((0, 1), repeat=M):
        dls = [i for i in range(M) if alpha[i]]
        uls = [j for j in range(M) if not alpha[j]]
        if not dls or not uls:
            continue
        for choice in itertools.product(itertools.product(dls, uls), repeat=B):
            yield Schedule.from_pairs(alpha, [(i, j, b) for b, (i, j) in enumerate(choice)], B)


def test_counts():
    assert count_schedules(2, 1) == 2
    # M=3, B=2: three splits of 1+2 each way, each with 2^2 pair choices
    assert count_schedules(3, 2) == 6 * 4
    # only 2 + 2 splits respect the side limit B = 2
    assert count_schedules(4, 2) == 6 * 16
    assert count_schedules(4, 8) <= 10**7


@pytest.mark.parametrize("M,B,seed", [(2, 1, 0), (3, 2, 1), (4, 2, 2), (3, 3, 3)])
def test_enumeration_matches_direct_search(M, B, seed):
    inst, powers = _cell(M, B, T=2, seed=seed)
    best, value = enumerate_optimal(inst, powers)
    direct = [(mmf_objective(s, inst, powers), s) for s in _all_schedules(M, B)]
    top = max(v for v, _ in direct)
    assert value == pytest.approx(top, rel=1e-12)
    assert mmf_objective(best, inst, powers) == pytest.approx(value, rel=1e-12)
    assert check_schedule(best, inst.config).hd_ok
    # ties go to the first schedule in lexicographic order
    first = next(s for v, s in direct if v >= top - 1e-12 * max(1, top))
    assert np.array_equal(first.alpha, best.alpha) and np.array_equal(first.x, best.x)


@pytest.mark.parametrize("seed", range(5))
def test_small_cell_bounds_every_scheduler(seed):
    inst, powers = _cell(3, 2, seed=seed)
    _, best = enumerate_optimal(inst, powers)
    assert solve_stage1(inst, powers).objective_value >= best - 1e-6
    for fn in SCHEDULERS.values():
        assert fn(inst, powers).mmf_value <= best + 1e-12


def test_enumeration_guard():
    inst, powers = _cell(8, 8)
    with pytest.raises(ValueError):
        enumerate_optimal(inst, powers)


def test_decision_examples():
    inst, tau = build_reduction_instance(ThreeDMInstance(1, frozenset({(1, 1, 1)})))
    assert check_decision_feasibility(inst, tau)
    inst, tau = build_reduction_instance(ThreeDMInstance(1, frozenset()))
    assert not check_decision_feasibility(inst, tau)
    with pytest.raises(ValueError):
        check_decision_feasibility(_cell(2, 1)[0])


def _power_lp_feasible(inst, schedule) -> bool:
    """Rate 1 on every link of a full-load schedule is a linear system in the powers."""
    cfg = inst.config
    B = cfg.B
    f = inst.samples[0].f
    pairs = schedule.pairs
    # variables: p_d[b] then p_u[b]
    rows, rhs = [], []
    for i, j, b in pairs:
        r = np.zeros(2 * B)       # p_u f - p_d <= -1
        r[B + b], r[b] = f[j, i, b], -1.0
        rows.append(r)
        rhs.append(-1.0)
        r = np.zeros(2 * B)       # p_d eta - p_u <= -1
        r[b], r[B + b] = cfg.si_gain[b], -1.0
        rows.append(r)
        rhs.append(-1.0)
    r = np.zeros(2 * B)
    r[:B] = 1.0
    rows.append(r)
    rhs.append(cfg.p_bs_max)
    p = LpProblem(np.zeros(2 * B), np.array(rows), np.array(rhs),
                  ub=np.concatenate([np.full(B, np.inf), np.full(B, cfg.p_ue_max)]))
    return solve_lp(p).status is LpStatus.OPTIMAL


def _decide_by_lp(inst) -> bool:
    M, B = inst.config.M, inst.config.B
    for s in _all_schedules(M, B):
        if check_schedule(s, inst.config).feasible and len({u for p in s.pairs
                                                           for u in p[:2]}) == M:
            if _power_lp_feasible(inst, s):
                return True
    return False


@given(st.sets(st.tuples(st.integers(1, 2), st.integers(1, 2), st.integers(1, 2))))
@settings(max_examples=60)
def test_decision_agrees_with_power_lp(triples):
    tdm = ThreeDMInstance(2, frozenset(triples))
    inst, tau = build_reduction_instance(tdm)
    decided = check_decision_feasibility(inst, tau)
    assert decided == _decide_by_lp(inst) == tdm.has_perfect_match()


def test_grid_guard_and_shape():
    inst, powers = _cell(4, 2)
    sched = Schedule.from_pairs([1, 1, 0, 0], [(0, 2, 0), (1, 3, 1)], 2)
    with pytest.raises(ValueError):
        grid_power_oracle(inst, sched, 0, grid_n=200)
    p_dl, p_ul, value = grid_power_oracle(inst, sched, 0, grid_n=20)
    assert p_dl.sum() <= inst.config.p_bs_max * (1 + 1e-12)
    assert np.all(p_ul.sum(axis=1) <= inst.config.p_ue_max * (1 + 1e-12))
    # the uniform split lies on a 20-point grid only approximately; the grid is a lower bound
    assert value > 0
