"""Power allocation for a fixed schedule: uniform split and SCA max-min.

For a fixed schedule the problem separates over channel samples.  Within a
sample every rate has the difference-of-concave form

    log2(S + I + N) - log2(I + N)

with ``I`` affine in the powers.  Linearising the subtracted term at the
current point gives a concave minorant that is tight there, so maximising
the minorant's min-rate can only raise the true min-rate (an MM ascent).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .model import (Instance, PowerProfile, Schedule, SystemConfig, check_schedule,
                    ue_rates)

LN2 = np.log(2.0)


def uniform_power(config: SystemConfig) -> PowerProfile:
    """Every RB gets an equal share of each transmitter's budget."""
    T, M, B = config.T, config.M, config.B
    return PowerProfile(np.full((T, B), config.p_bs_max / B),
                        np.full((T, M, B), config.p_ue_max / B))


@dataclass(frozen=True)
class ScaParams:
    tol: float = 1e-4         # stop once the true min-rate gains less than this
    max_iters: int = 30
    tau_tol: float = 1e-5     # accuracy of each concave subproblem

    def __post_init__(self):
        if self.tol <= 0 or self.max_iters < 1 or self.tau_tol <= 0:
            raise ValueError("SCA parameters must be positive")


@dataclass
class ScaResult:
    p_dl: np.ndarray          # (B,)
    p_ul: np.ndarray          # (M, B)
    tau: float                # true weighted min-rate at the returned powers
    history: list = field(default_factory=list)   # true min-rate per accepted iterate
    iterations: int = 0
    converged: bool = True


class _PairModel:
    """Normalised per-sample rate model of a schedule with one pair per RB.

    Decision variables are ``u[b] = p_d[b] / P_BS`` and ``w[b] = p_u[ul_b, b] / P_UE``.
    """

    def __init__(self, instance: Instance, schedule: Schedule, t: int):
        cfg = instance.config
        s = instance.samples[t]
        pairs = schedule.pairs
        self.B, self.M = cfg.B, cfg.M
        self.dl = np.array([p[0] for p in pairs])
        self.ul = np.array([p[1] for p in pairs])
        b = np.arange(self.B)
        nd = cfg.noise_ue[self.dl]
        self.a_d = cfg.p_bs_max * s.h[self.dl, b] / nd
        self.c_d = cfg.p_ue_max * s.f[self.ul, self.dl, b] / nd
        self.a_u = cfg.p_ue_max * s.g[self.ul, b] / cfg.noise_bs
        self.c_u = cfg.p_bs_max * cfg.si_gain / cfg.noise_bs
        self.Dm = np.zeros((self.M, self.B))
        self.Um = np.zeros((self.M, self.B))
        self.Dm[self.dl, b] = 1.0
        self.Um[self.ul, b] = 1.0
        self.gamma = cfg.weights
        self.p_bs, self.p_ue = cfg.p_bs_max, cfg.p_ue_max

    def rates(self, u, w):
        rd = np.log2(1 + self.a_d * u / (1 + self.c_d * w))
        ru = np.log2(1 + self.a_u * w / (1 + self.c_u * u))
        return self.Dm @ rd + self.Um @ ru

    def min_rate(self, u, w) -> float:
        return float(np.min(self.rates(u, w) / self.gamma))

    def lower_bound(self, u, w, u0, w0):
        """Concave minorant of every UE rate, tight at ``(u0, w0)``."""
        ld = (np.log2(1 + self.a_d * u + self.c_d * w) - np.log2(1 + self.c_d * w0)
              - self.c_d * (w - w0) / ((1 + self.c_d * w0) * LN2))
        lu = (np.log2(1 + self.a_u * w + self.c_u * u) - np.log2(1 + self.c_u * u0)
              - self.c_u * (u - u0) / ((1 + self.c_u * u0) * LN2))
        return self.Dm @ ld + self.Um @ lu

    def lower_bound_jac(self, u, w, u0, w0):
        sd = (1 + self.a_d * u + self.c_d * w) * LN2
        su = (1 + self.a_u * w + self.c_u * u) * LN2
        dld_du = self.a_d / sd
        dld_dw = self.c_d / sd - self.c_d / ((1 + self.c_d * w0) * LN2)
        dlu_dw = self.a_u / su
        dlu_du = self.c_u / su - self.c_u / ((1 + self.c_u * u0) * LN2)
        return np.hstack([self.Dm * dld_du + self.Um * dlu_du,
                          self.Dm * dld_dw + self.Um * dlu_dw])

    def powers(self, u, w):
        p_dl = self.p_bs * np.asarray(u, float)
        p_ul = np.zeros((self.M, self.B))
        p_ul[self.ul, np.arange(self.B)] = self.p_ue * np.asarray(w, float)
        return p_dl, p_ul


def _check_feasible(schedule: Schedule, config: SystemConfig):
    report = check_schedule(schedule, config)
    if not report.feasible:
        raise ValueError("power allocation needs a feasible schedule "
                         f"(ofdma={report.ofdma_ok}, hd={report.hd_ok}, "
                         f"pairing={report.pairing_ok})")


def _subproblem(model: _PairModel, u0, w0, tau0, tol):
    """max tau s.t. minorant_i >= tau * gamma_i and the normalised budgets."""
    B = model.B
    # constraint rows: minorants, BS budget, one budget per uplink UE
    ul_rows = np.zeros((model.M, B))
    ul_rows[model.ul, np.arange(B)] = 1.0
    ul_rows = ul_rows[ul_rows.any(axis=1)]
    A_budget = np.zeros((1 + ul_rows.shape[0], 2 * B + 1))
    A_budget[0, :B] = 1.0
    A_budget[1:, B:2 * B] = ul_rows

    def lb_con(z):
        return model.lower_bound(z[:B], z[B:2 * B], u0, w0) - z[-1] * model.gamma

    def lb_jac(z):
        J = model.lower_bound_jac(z[:B], z[B:2 * B], u0, w0)
        return np.hstack([J, -model.gamma[:, None]])

    cons = [{"type": "ineq", "fun": lb_con, "jac": lb_jac},
            {"type": "ineq", "fun": lambda z: 1.0 - A_budget @ z, "jac": lambda z: -A_budget}]
    grad = np.zeros(2 * B + 1)
    grad[-1] = -1.0
    z0 = np.concatenate([u0, w0, [tau0]])
    bounds = [(0.0, 1.0)] * (2 * B) + [(0.0, None)]
    res = minimize(lambda z: -z[-1], z0, jac=lambda z: grad, bounds=bounds,
                   constraints=cons, method="SLSQP",
                   options={"ftol": tol, "maxiter": 200})
    z = np.clip(res.x, 0.0, 1.0)[: 2 * B]
    u, w = z[:B], z[B:]
    # tidy tiny budget overshoots from the solver
    u = u / max(1.0, u.sum())
    for row in ul_rows:
        idx = row > 0
        w[idx] = w[idx] / max(1.0, w[idx].sum())
    return u, w


def sca_power(instance: Instance, schedule: Schedule, t: int,
              params: ScaParams | None = None) -> ScaResult:
    """Successive concave lower-bounding for sample ``t``, started at uniform power.

    A step is kept only if the true min-rate does not drop, so the logged
    sequence is non-decreasing and the result never falls below uniform power.
    """
    params = params or ScaParams()
    cfg = instance.config
    _check_feasible(schedule, cfg)
    model = _PairModel(instance, schedule, t)
    # uniform start: P_BS / B and P_UE / B on every RB
    u = np.full(cfg.B, 1.0 / cfg.B)
    w = np.full(cfg.B, 1.0 / cfg.B)
    tau = model.min_rate(u, w)
    history = [tau]
    converged = False
    for _ in range(params.max_iters):
        u_new, w_new = _subproblem(model, u, w, tau, params.tau_tol)
        tau_new = model.min_rate(u_new, w_new)
        if tau_new < tau:
            # inexact subproblem; keep the last accepted point
            converged = True
            break
        gain = tau_new - tau
        u, w, tau = u_new, w_new, tau_new
        history.append(tau)
        if gain < params.tol:
            converged = True
            break
    p_dl, p_ul = model.powers(u, w)
    return ScaResult(p_dl, p_ul, tau, history, len(history) - 1, converged)


def lower_bound_rates(instance: Instance, schedule: Schedule, t: int, p_dl, p_ul,
                      p0_dl, p0_ul) -> np.ndarray:
    """Per-UE concave minorants at ``(p_dl, p_ul)`` built around ``(p0_dl, p0_ul)``."""
    model = _PairModel(instance, schedule, t)
    b = np.arange(model.B)

    def norm(pd, pu):
        return (np.asarray(pd, float) / model.p_bs,
                np.asarray(pu, float)[model.ul, b] / model.p_ue)

    u, w = norm(p_dl, p_ul)
    u0, w0 = norm(p0_dl, p0_ul)
    return model.lower_bound(u, w, u0, w0)


def sca_power_profile(instance: Instance, schedule: Schedule,
                      params: ScaParams | None = None) -> tuple[PowerProfile, dict]:
    """Run SCA on every sample; returns the profile and iteration diagnostics."""
    cfg = instance.config
    p_dl = np.zeros((cfg.T, cfg.B))
    p_ul = np.zeros((cfg.T, cfg.M, cfg.B))
    iters, capped = 0, False
    for t in range(cfg.T):
        res = sca_power(instance, schedule, t, params)
        p_dl[t], p_ul[t] = res.p_dl, res.p_ul
        iters += res.iterations
        capped |= not res.converged
    return PowerProfile(p_dl, p_ul), {"sca_iters": iters, "sca_capped": capped}


def sample_mmf(instance: Instance, schedule: Schedule, powers: PowerProfile) -> np.ndarray:
    """Weighted min-rate of each sample, shape (T,)."""
    rates = ue_rates(schedule, instance, powers)
    return np.min(rates / instance.config.weights[None, :], axis=1)

