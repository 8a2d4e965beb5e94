"""Direction assignment and pairing algorithms for fixed power profiles.

All schedulers share the signature ``(instance, powers, ...) ->
SchedulerResult`` and never hide an infeasible outcome: the returned report
states which constraint families the rounded schedule violates.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .lp import LpNumericalError, LpSolution, WarmLp
from .model import (FeasibilityReport, Instance, PowerProfile, Schedule, check_schedule,
                    mmf_from_rates, mmf_objective)
from .relax import (IrmWeights, VariableLayout, apply_lq_linearization, build_stage1_lp,
                    build_stage2_lp, clamped_rates, lq_objective)


@dataclass
class IrmParams:
    q: float = 0.5
    rho1: float = 1.0
    rho2: float = 1.0
    eps1: float = 0.1
    eps2: float = 0.1
    sigma1: float = 1e-3
    sigma2: float = 0.1
    kappa: float = 1.5
    max_inner: int = 50
    max_outer: int = 20

    def __post_init__(self):
        if not 0 < self.q < 1:
            raise ValueError("q must lie in (0, 1)")
        if not (0 < self.sigma1 < 1 and 0 < self.sigma2 < 1):
            raise ValueError("sigma1 and sigma2 must lie in (0, 1)")
        if self.kappa <= 1:
            raise ValueError("kappa must exceed 1")


@dataclass
class SchedulerResult:
    schedule: Schedule
    report: FeasibilityReport
    mmf_value: float
    diagnostics: dict = field(default_factory=dict)


def _result(schedule, instance, powers, diagnostics, started) -> SchedulerResult:
    diagnostics["wall_time_s"] = time.perf_counter() - started
    return SchedulerResult(schedule, check_schedule(schedule, instance.config),
                           mmf_objective(schedule, instance, powers), diagnostics)


# ---------------------------------------------------------------------------
# rounding


def round_alpha(alpha_frac, B: int, repair: bool = True) -> np.ndarray:
    """Nearest-integer rounding (0.5 goes to downlink) with count repair.

    If more than ``B`` UEs land on one side, the ones with the weakest
    fractional preference are moved across (skipped when ``repair`` is off).
    A side left empty always receives the UE closest to 0.5.
    """
    a_frac = np.asarray(alpha_frac, dtype=float)
    M = a_frac.size
    alpha = (a_frac >= 0.5).astype(int)
    if repair and alpha.sum() > B:
        ones = np.flatnonzero(alpha == 1)
        drop = ones[np.argsort(a_frac[ones], kind="stable")][: alpha.sum() - B]
        alpha[drop] = 0
    if repair and M - alpha.sum() > B:
        zeros = np.flatnonzero(alpha == 0)
        lift = zeros[np.argsort(-a_frac[zeros], kind="stable")][: M - alpha.sum() - B]
        alpha[lift] = 1
    if M > 1 and alpha.sum() == 0:
        alpha[int(np.argmax(a_frac))] = 1
    elif M > 1 and alpha.sum() == M:
        alpha[int(np.argmin(a_frac))] = 0
    return alpha


def round_x_per_rb(x_frac) -> np.ndarray:
    """Keep the largest off-diagonal entry of each RB block; ties go to the lowest (i, j)."""
    x = np.array(x_frac, dtype=float)
    M, _, B = x.shape
    x[np.arange(M), np.arange(M), :] = -np.inf
    out = np.zeros(x.shape, dtype=np.int8)
    for b in range(B):
        i, j = divmod(int(np.argmax(x[:, :, b])), M)
        out[i, j, b] = 1
    return out


def _greedy_pick(x_frac: np.ndarray, fixed: dict) -> tuple[int, int, int]:
    """Largest entry over RBs not yet pinned, ties lexicographic in (i, j, b)."""
    x = np.array(x_frac, dtype=float)
    M = x.shape[0]
    x[np.arange(M), np.arange(M), :] = -np.inf
    if fixed:
        x[:, :, list(fixed)] = -np.inf
    i, j, b = np.unravel_index(int(np.argmax(x)), x.shape)
    return int(i), int(j), int(b)


# ---------------------------------------------------------------------------
# relaxation-based schedulers


def _stage1(instance, powers, rates, diag, central, stage1=None, **lp_kw):
    """Solve the stage-one relaxation, or reuse ``stage1`` from an earlier call."""
    if stage1 is not None:
        diag["stage1_reused"] = True
        return stage1, VariableLayout(instance.config.M, instance.config.B, instance.config.T)
    lp, layout = build_stage1_lp(instance, powers, rates=rates, **lp_kw)
    sol = WarmLp(lp, central=central).solve()
    diag["lp_solves"] = diag.get("lp_solves", 0) + 1
    if not sol.optimal:
        raise LpNumericalError(f"stage-one relaxation returned {sol.status.value}")
    return sol, layout


def _stage1_alpha(instance, powers, rates, diag, central, stage1):
    """Stage one of the two-stage methods: plain nearest rounding of the LP's alpha."""
    sol, layout = _stage1(instance, powers, rates, diag, central, stage1)
    _, alpha_frac, _ = layout.unpack(sol.v)
    alpha = round_alpha(alpha_frac, instance.config.B, repair=False)
    diag["lp_bound"] = sol.objective_value
    diag["alpha_unbalanced"] = bool(max(alpha.sum(), alpha.size - alpha.sum())
                                    > instance.config.B)
    return alpha, layout


def solve_stage1(instance: Instance, powers: PowerProfile, *, central: bool = True
                 ) -> LpSolution:
    """The shared stage-one relaxation; pass it as ``stage1=`` to skip re-solving."""
    return _stage1(instance, powers, clamped_rates(instance, powers), {}, central)[0]


def solve_sr(instance: Instance, powers: PowerProfile, *, central: bool = True,
             stage1: LpSolution | None = None) -> SchedulerResult:
    """Solve the relaxation once and round alpha and every RB block independently."""
    started = time.perf_counter()
    diag: dict = {}
    rates = clamped_rates(instance, powers)
    sol, layout = _stage1(instance, powers, rates, diag, central, stage1)
    x, alpha, _ = layout.unpack(sol.v)
    alpha_int = round_alpha(alpha, instance.config.B, repair=False)
    diag["lp_bound"] = sol.objective_value
    return _result(Schedule(alpha_int, round_x_per_rb(x)), instance, powers, diag, started)


def _stage2_solve(instance, powers, rates, alpha, fixed, state, diag, central) -> LpSolution:
    """Solve the pinned LP, dropping the pairing cut once it becomes infeasible."""
    lp, _ = build_stage2_lp(instance, powers, alpha, fixed, rates=rates,
                            pairing_cut=state["pairing_cut"])
    sol = WarmLp(lp, central=central).solve()
    diag["lp_solves"] = diag.get("lp_solves", 0) + 1
    if not sol.optimal and state["pairing_cut"]:
        state["pairing_cut"] = False
        diag["pairing_cut_dropped"] = True
        return _stage2_solve(instance, powers, rates, alpha, fixed, state, diag, central)
    if not sol.optimal:
        raise LpNumericalError(f"stage-two relaxation returned {sol.status.value}")
    return sol


def solve_2s_sr(instance: Instance, powers: PowerProfile, *, central: bool = True,
                stage1: LpSolution | None = None) -> SchedulerResult:
    """Round alpha from the relaxation, re-solve with alpha pinned, round every RB."""
    started = time.perf_counter()
    diag: dict = {"pairing_cut_dropped": False}
    rates = clamped_rates(instance, powers)
    alpha, layout = _stage1_alpha(instance, powers, rates, diag, central, stage1)
    sol2 = _stage2_solve(instance, powers, rates, alpha, {}, {"pairing_cut": True}, diag,
                         central)
    x, _, _ = layout.unpack(sol2.v)
    return _result(Schedule(alpha, round_x_per_rb(x)), instance, powers, diag, started)


def _greedy_rounding(instance, alpha, solve_free, diag) -> Schedule:
    """Pin one RB per round at the largest fractional entry until all are pinned."""
    fixed: dict = {}
    B = instance.config.B
    diag["greedy_rounds"] = 0
    while len(fixed) < B:
        x = solve_free(fixed)
        i, j, b = _greedy_pick(x, fixed)
        fixed[b] = (i, j)
        diag["greedy_rounds"] += 1
    return Schedule.from_pairs(alpha, [(i, j, b) for b, (i, j) in fixed.items()], B)


def solve_2s_srgr(instance: Instance, powers: PowerProfile, *, central: bool = True,
                  stage1: LpSolution | None = None) -> SchedulerResult:
    """Two-stage relaxation with greedy rounding, one RB pinned per LP solve."""
    started = time.perf_counter()
    diag: dict = {"pairing_cut_dropped": False}
    rates = clamped_rates(instance, powers)
    alpha, layout = _stage1_alpha(instance, powers, rates, diag, central, stage1)
    state = {"pairing_cut": True}

    def solve_free(fixed):
        sol2 = _stage2_solve(instance, powers, rates, alpha, fixed, state, diag, central)
        return layout.unpack(sol2.v)[0]

    schedule = _greedy_rounding(instance, alpha, solve_free, diag)
    return _result(schedule, instance, powers, diag, started)


# ---------------------------------------------------------------------------
# iterative reweighted minimisation


@dataclass
class IrmResult:
    x: np.ndarray
    alpha: np.ndarray
    tau: np.ndarray
    inner_iters: list
    outer_iters: int
    lp_solves: int
    capped: bool
    # one list per outer round: regularised objective at the start point and
    # after every inner solve, all under that round's (rho, eps)
    history: list


def irm_solve(instance: Instance, powers: PowerProfile, params: IrmParams | None = None, *,
              stage: str = "one", alpha_fixed=None, fixed_rbs=None, pairing_cut: bool = True,
              rates=None, scale_rho: bool = True, central: bool = False) -> IrmResult:
    """Iteratively reweighted LP for the lq-regularised relaxation.

    ``stage="one"`` optimises x and alpha; ``stage="two"`` keeps alpha at
    ``alpha_fixed`` (plus any pinned RBs) and penalises x only, so the outer
    binariness test on alpha is met after one round.  With ``central`` every
    LP returns the central point of its optimal face, as in the other
    relaxation schedulers.
    """
    params = params or IrmParams()
    if stage not in ("one", "two"):
        raise ValueError("stage must be 'one' or 'two'")
    rates = clamped_rates(instance, powers) if rates is None else rates
    if stage == "one":
        base, layout = build_stage1_lp(instance, powers, rates=rates, pairing_cut=pairing_cut)
    else:
        if alpha_fixed is None:
            raise ValueError("stage two needs alpha_fixed")
        base, layout = build_stage2_lp(instance, powers, alpha_fixed, fixed_rbs, rates=rates,
                                       pairing_cut=pairing_cut)
    with_alpha = stage == "one"
    session = WarmLp(base, central=central)
    sol = session.solve()
    if not sol.optimal:
        raise _IrmInfeasible(sol)
    v = sol.v
    rho1, rho2, eps1, eps2 = params.rho1, params.rho2, params.eps1, params.eps2
    inner_counts, history, capped = [], [], False
    outer = 0
    for outer in range(1, params.max_outer + 1):
        x_prev, a_prev, _ = layout.unpack(v)
        trace = [lq_objective(layout, v, rho1, rho2, eps1, eps2, params.q, with_alpha)]
        r = 0
        for r in range(1, params.max_inner + 1):
            w = IrmWeights.from_iterate(x_prev, a_prev, rho1, rho2, eps1, eps2, params.q)
            session.set_objective(apply_lq_linearization(base, layout, w, with_alpha).c)
            sol = session.solve()
            if not sol.optimal:
                raise LpNumericalError(f"IRM subproblem returned {sol.status.value}")
            v = sol.v
            trace.append(lq_objective(layout, v, rho1, rho2, eps1, eps2, params.q, with_alpha))
            x_new, a_new, _ = layout.unpack(v)
            dx = np.abs(x_new - x_prev).sum()
            da = np.abs(a_new - a_prev).sum()
            x_prev, a_prev = x_new, a_new
            if dx <= params.sigma1 and (not with_alpha or da <= params.sigma2):
                break
        else:
            capped = True
        inner_counts.append(r)
        history.append(trace)
        if scale_rho:
            rho1, rho2 = params.kappa * rho1, params.kappa * rho2
            eps1, eps2 = eps1 / params.kappa, eps2 / params.kappa
        _, alpha, _ = layout.unpack(v)
        if not with_alpha or np.max(np.minimum(alpha, 1 - alpha)) <= params.sigma2:
            break
    else:
        capped = True
    x, alpha, tau = layout.unpack(v)
    return IrmResult(x, alpha, tau, inner_counts, outer, session.num_solves, capped, history)


class _IrmInfeasible(Exception):
    def __init__(self, sol: LpSolution):
        super().__init__(f"initial relaxation returned {sol.status.value}")
        self.solution = sol


def solve_2s_irmgr(instance: Instance, powers: PowerProfile, params: IrmParams | None = None,
                   *, central: bool = True) -> SchedulerResult:
    """IRM on both stages, then greedy rounding with one IRM solve per pinned RB.

    Stage one always uses vertex solutions. ``central`` selects interior-point
    (central) solutions for the stage-two solves, which spread mass over tied
    pairs and makes the greedy pick less arbitrary at full load.
    """
    started = time.perf_counter()
    params = params or IrmParams()
    diag: dict = {"pairing_cut_dropped": False, "lp_solves": 0, "irm_capped": False}
    rates = clamped_rates(instance, powers)
    first = irm_solve(instance, powers, params, stage="one", rates=rates, central=False)
    diag["lp_solves"] += first.lp_solves
    diag["irm_capped"] |= first.capped
    diag["stage1_outer_iters"] = first.outer_iters
    alpha = round_alpha(first.alpha, instance.config.B)
    state = {"pairing_cut": True}

    def solve_free(fixed):
        try:
            res = irm_solve(instance, powers, params, stage="two", alpha_fixed=alpha,
                            fixed_rbs=fixed, pairing_cut=state["pairing_cut"], rates=rates,
                            central=central)
        except _IrmInfeasible:
            if not state["pairing_cut"]:
                raise
            diag["lp_solves"] += 1
            state["pairing_cut"] = False
            diag["pairing_cut_dropped"] = True
            return solve_free(fixed)
        diag["lp_solves"] += res.lp_solves
        diag["irm_capped"] |= res.capped
        return res.x

    schedule = _greedy_rounding(instance, alpha, solve_free, diag)
    return _result(schedule, instance, powers, diag, started)


# ---------------------------------------------------------------------------
# sequential heuristic baseline


def heuristic_schedule(instance: Instance, powers: PowerProfile) -> SchedulerResult:
    """Direction by average rates, then one pair per RB in RB order.

    While some UE is still unserved, only pairs containing an unserved UE are
    eligible; pairs bringing in two new UEs beat pairs bringing in one, and
    within a class a candidate is scored by the sample-average minimum rate
    over the UEs it would leave served.  Afterwards the plain MMF value is
    used.  At full load the two-new-UE priority serves every UE.
    """
    started = time.perf_counter()
    cfg = instance.config
    M, B = cfg.M, cfg.B
    rd, ru = clamped_rates(instance, powers)
    denom = (M - 1) * B * cfg.T
    r_dl = rd.sum(axis=(0, 2, 3)) / denom
    r_ul = ru.sum(axis=(0, 1, 3)) / denom
    alpha = (r_dl >= r_ul).astype(int)
    if alpha.sum() > B:
        dl = np.flatnonzero(alpha)
        alpha[dl[np.argsort(-r_dl[dl], kind="stable")][B:]] = 0
    if M - alpha.sum() > B:
        ul = np.flatnonzero(alpha == 0)
        alpha[ul[np.argsort(-r_ul[ul], kind="stable")][B:]] = 1
    if M > 1 and alpha.sum() in (0, M):
        alpha[int(np.argmin(np.abs(r_dl - r_ul)))] ^= 1
    downs, ups = np.flatnonzero(alpha == 1), np.flatnonzero(alpha == 0)
    weights = cfg.weights
    rates = np.zeros((cfg.T, M))
    served = np.zeros(M, dtype=bool)
    pairs = []
    for b in range(B):
        best, best_key = None, (-1, -np.inf)
        need_new = not served.all()
        for i in downs:
            for j in ups:
                fresh = int(not served[i]) + int(not served[j])
                if need_new and fresh == 0:
                    continue
                trial = rates.copy()
                trial[:, i] += rd[:, i, j, b]
                trial[:, j] += ru[:, i, j, b]
                mask = served.copy()
                mask[[i, j]] = True
                key = (fresh, mmf_from_rates(trial[:, mask], weights[mask]))
                if key > best_key:
                    best, best_key = (int(i), int(j)), key
        i, j = best
        rates[:, i] += rd[:, i, j, b]
        rates[:, j] += ru[:, i, j, b]
        served[[i, j]] = True
        pairs.append((i, j, b))
    schedule = Schedule.from_pairs(alpha, pairs, B)
    return _result(schedule, instance, powers, {"lp_solves": 0}, started)


SCHEDULERS = {
    "sr": solve_sr,
    "2s-sr": solve_2s_sr,
    "2s-srgr": solve_2s_srgr,
    "2s-irmgr": solve_2s_irmgr,
    "heuristic": heuristic_schedule,
}
