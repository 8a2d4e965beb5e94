"""Exact brute-force references for small instances."""

from __future__ import annotations

import itertools

import numpy as np

from .model import Instance, PowerProfile, Schedule, rate_tables

ENUM_LIMIT = 10**7
GRID_LIMIT = 10**6
_CHUNK = 1 << 16


def _directions(M: int, B: int):
    """Direction vectors in lexicographic order with both sides non-empty and <= B."""
    for alpha in itertools.product((0, 1), repeat=M):
        n_dl = sum(alpha)
        if 0 < n_dl <= B and 0 < M - n_dl <= B:
            yield np.array(alpha)


def count_schedules(M: int, B: int) -> int:
    """Number of schedules ``enumerate_optimal`` visits."""
    total = 0
    for alpha in _directions(M, B):
        total += (int(alpha.sum()) * int(M - alpha.sum())) ** B
    return total


def enumerate_optimal(instance: Instance, powers: PowerProfile) -> tuple[Schedule, float]:
    """Exhaustive search over directions and per-RB pairs; first maximiser wins.

    Order: alpha lexicographic, then pair choices with RB 0 most significant
    and pairs in ``(dl, ul)`` order.
    """
    cfg = instance.config
    M, B = cfg.M, cfg.B
    n = count_schedules(M, B)
    if n > ENUM_LIMIT:
        raise ValueError(f"{n} schedules exceed the enumeration limit {ENUM_LIMIT}")
    rd, ru = rate_tables(instance, powers)
    w = cfg.weights
    best_val, best = -np.inf, None
    for alpha in _directions(M, B):
        dls, uls = np.flatnonzero(alpha == 1), np.flatnonzero(alpha == 0)
        opts = [(i, j) for i in dls for j in uls]
        n_opt = len(opts)
        # contrib[b, o] = per-sample per-UE rate added by option o on RB b
        contrib = np.zeros((B, n_opt, cfg.T, M))
        for o, (i, j) in enumerate(opts):
            contrib[:, o, :, i] = rd[:, i, j, :].T
            contrib[:, o, :, j] = ru[:, i, j, :].T
        radix = n_opt ** np.arange(B - 1, -1, -1)
        total = n_opt ** B
        for start in range(0, total, _CHUNK):
            code = np.arange(start, min(start + _CHUNK, total))
            digits = (code[:, None] // radix[None, :]) % n_opt     # (N, B)
            rates = contrib[0, digits[:, 0]]                          # (N, T, M)
            for b in range(1, B):
                rates = rates + contrib[b, digits[:, b]]
            vals = np.mean(np.min(rates / w, axis=2), axis=1)
            k = int(np.argmax(vals))
            if vals[k] > best_val:
                best_val = float(vals[k])
                pairs = [(opts[d][0], opts[d][1], b) for b, d in enumerate(digits[k])]
                best = Schedule.from_pairs(alpha, pairs, B)
    return best, best_val


def _is_reduction_shaped(instance: Instance) -> bool:
    cfg = instance.config
    M, B = cfg.M, cfg.B
    if M != 2 * B or cfg.T != 1:
        return False
    s = instance.samples[0]
    return bool(np.all(s.h == 1) and np.all(s.g == 1) and np.all(cfg.si_gain == 1)
                and cfg.noise_bs == 1 and np.all(cfg.noise_ue == 1)
                and np.all(cfg.weights == 1) and cfg.p_bs_max == B and cfg.p_ue_max == 2
                and np.isin(s.f, (0.0, 1.0)).all())


def _pair_power_feasible(f_val: float) -> bool:
    """Unit-gain pair at rate 1 each: p_d >= p_u f + 1 and p_u >= p_d + 1.

    With f = 0 the point (1, 2) works and fits the budgets P_BS = B (one unit per
    RB) and P_UE = 2 (one RB per UE); with f = 1 the two inequalities give
    p_d >= p_d + 2.
    """
    return f_val == 0.0


def check_decision_feasibility(instance: Instance, tau: float = 1.0) -> bool:
    """Decide the full-load rate-``tau`` problem on a reduction-shaped instance.

    At full load every UE must occupy exactly one RB, so the question is
    whether the RBs can be given disjoint UE pairs that are each power
    feasible.  Searched by backtracking over RBs.
    """
    if tau != 1.0 or not _is_reduction_shaped(instance):
        raise ValueError("decision check only handles reduction instances at tau = 1")
    cfg = instance.config
    M, B = cfg.M, cfg.B
    f = instance.samples[0].f
    used = np.zeros(M, dtype=bool)

    def place(b: int) -> bool:
        if b == B:
            return True
        for i in range(M):
            if used[i]:
                continue
            for j in range(M):
                if j == i or used[j] or not _pair_power_feasible(f[j, i, b]):
                    continue
                used[i] = used[j] = True
                if place(b + 1):
                    return True
                used[i] = used[j] = False
        return False

    return place(0)


def grid_power_oracle(instance: Instance, schedule: Schedule, t: int, grid_n: int = 200
                      ) -> tuple[np.ndarray, np.ndarray, float]:
    """Grid search over the downlink and uplink power of every RB of sample ``t``.

    Each coordinate takes ``grid_n`` evenly spaced values in ``[0, budget]``;
    points that break a budget are discarded.  Returns ``(p_dl, p_ul, value)``.
    """
    cfg = instance.config
    M, B = cfg.M, cfg.B
    if grid_n < 2 or float(grid_n) ** (2 * B) > GRID_LIMIT:
        raise ValueError(f"grid of {grid_n}^{2 * B} points exceeds {GRID_LIMIT}")
    pairs = schedule.pairs
    if sorted(p[2] for p in pairs) != list(range(B)):
        raise ValueError("schedule must hold exactly one pair per RB")
    s = instance.samples[t]
    axes = [np.linspace(0.0, cfg.p_bs_max, grid_n)] * B + \
           [np.linspace(0.0, cfg.p_ue_max, grid_n)] * B
    mesh = np.meshgrid(*axes, indexing="ij")
    pd = np.stack([m.ravel() for m in mesh[:B]], axis=1)    # (N, B)
    pu = np.stack([m.ravel() for m in mesh[B:]], axis=1)    # (N, B)
    ok = pd.sum(axis=1) <= cfg.p_bs_max * (1 + 1e-12)
    for j in range(M):
        mine = [b for (_, ul, b) in pairs if ul == j]
        if mine:
            ok &= pu[:, mine].sum(axis=1) <= cfg.p_ue_max * (1 + 1e-12)
    rates = np.zeros((pd.shape[0], M))
    for i, j, b in pairs:
        sinr_d = pd[:, b] * s.h[i, b] / (pu[:, b] * s.f[j, i, b] + cfg.noise_ue[i])
        sinr_u = pu[:, b] * s.g[j, b] / (pd[:, b] * cfg.si_gain[b] + cfg.noise_bs)
        rates[:, i] += np.log2(1 + sinr_d)
        rates[:, j] += np.log2(1 + sinr_u)
    vals = np.where(ok, np.min(rates / cfg.weights, axis=1), -np.inf)
    k = int(np.argmax(vals))
    p_dl = pd[k].copy()
    p_ul = np.zeros((M, B))
    for _, j, b in pairs:
        p_ul[j, b] = pu[k, b]
    return p_dl, p_ul, float(vals[k])
