"""LP relaxations of the joint direction-assignment / pairing problem.

Every builder returns an :class:`~fdsched.lp.LpProblem` over the same column
layout: all ``x[i, j, b]`` (row-major), then ``alpha``, then one epigraph
variable ``tau[t]`` per channel sample.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .lp import LpProblem
from .model import RATE_FLOOR, Instance, PowerProfile, rate_tables


@dataclass(frozen=True)
class VariableLayout:
    M: int
    B: int
    T: int

    @property
    def num_x(self) -> int:
        return self.M * self.M * self.B

    @property
    def n(self) -> int:
        return self.num_x + self.M + self.T

    def x_index(self, i, j, b):
        return (np.asarray(i) * self.M + np.asarray(j)) * self.B + np.asarray(b)

    def alpha_index(self, i):
        return self.num_x + np.asarray(i)

    def tau_index(self, t):
        return self.num_x + self.M + np.asarray(t)

    @property
    def x_slice(self) -> slice:
        return slice(0, self.num_x)

    @property
    def alpha_slice(self) -> slice:
        return slice(self.num_x, self.num_x + self.M)

    @property
    def tau_slice(self) -> slice:
        return slice(self.num_x + self.M, self.n)

    def unpack(self, v: np.ndarray):
        """Split a solution vector into ``(x (M, M, B), alpha (M,), tau (T,))``."""
        return (v[self.x_slice].reshape(self.M, self.M, self.B),
                v[self.alpha_slice].copy(), v[self.tau_slice].copy())


@dataclass(frozen=True)
class IrmWeights:
    """Linearisation weights of the lq penalty around a previous iterate."""

    W: np.ndarray
    w_a: np.ndarray
    w_b: np.ndarray
    rho1: float
    rho2: float
    eps1: float
    eps2: float
    q: float

    @classmethod
    def from_iterate(cls, x_prev, alpha_prev, rho1, rho2, eps1, eps2, q) -> "IrmWeights":
        if not 0 < q < 1 or eps1 <= 0 or eps2 <= 0 or rho1 < 0 or rho2 < 0:
            raise ValueError("need 0 < q < 1, eps > 0 and rho >= 0")
        # LP solutions can undershoot the [0, 1] box by solver tolerance
        x_prev = np.clip(x_prev, 0.0, 1.0)
        alpha_prev = np.clip(alpha_prev, 0.0, 1.0)
        return cls(W=(x_prev + eps1) ** (q - 1), w_a=(alpha_prev + eps2) ** (q - 1),
                   w_b=(1 - alpha_prev + eps2) ** (q - 1),
                   rho1=rho1, rho2=rho2, eps1=eps1, eps2=eps2, q=q)


def clamped_rates(instance: Instance, powers: PowerProfile):
    rd, ru = rate_tables(instance, powers)
    rd[rd < RATE_FLOOR] = 0.0
    ru[ru < RATE_FLOOR] = 0.0
    return rd, ru


def _epigraph_rows(layout: VariableLayout, rd, ru, weights):
    """Rows ``gamma_i tau_t - R_i(t) <= 0`` for every (t, i)."""
    M, B, T = layout.M, layout.B, layout.T
    xid = np.arange(layout.num_x).reshape(M, M, B)
    t_idx, i_idx, j_idx, b_idx = np.indices((T, M, M, B)).reshape(4, -1)
    cols = xid[i_idx, j_idx, b_idx]
    # downlink UE i collects rd[t, i, j, b]; uplink UE j collects ru[t, i, j, b]
    rows = np.concatenate([t_idx * M + i_idx, t_idx * M + j_idx])
    vals = -np.concatenate([rd.ravel(), ru.ravel()])
    cols = np.concatenate([cols, cols])
    nz = vals != 0
    rows, cols, vals = rows[nz], cols[nz], vals[nz]
    tr, ti = np.divmod(np.arange(T * M), M)
    rows = np.concatenate([rows, tr * M + ti])
    cols = np.concatenate([cols, layout.tau_index(tr)])
    vals = np.concatenate([vals, weights[ti]])
    return sp.csr_matrix((vals, (rows, cols)), shape=(T * M, layout.n)), np.zeros(T * M)


def _hd_rows(layout: VariableLayout, aggregated: bool):
    M, B = layout.M, layout.B
    if aggregated:
        # sum_j x_ijb <= alpha_i and sum_j x_jib <= 1 - alpha_i, per (i, b)
        i, j, b = np.indices((M, M, B)).reshape(3, -1)
        keep = i != j
        i, j, b = i[keep], j[keep], b[keep]
        x = layout.x_index(i, j, b)
        r_dl = i * B + b
        r_ul = M * B + j * B + b
        rows = np.concatenate([r_dl, r_ul, np.arange(M * B), M * B + np.arange(M * B)])
        ib_i = np.repeat(np.arange(M), B)
        cols = np.concatenate([x, x, layout.alpha_index(ib_i), layout.alpha_index(ib_i)])
        vals = np.concatenate([np.ones(2 * x.size), -np.ones(M * B), np.ones(M * B)])
        rhs = np.concatenate([np.zeros(M * B), np.ones(M * B)])
        return sp.csr_matrix((vals, (rows, cols)), shape=(2 * M * B, layout.n)), rhs
    # one row per (i, j, b) and direction, exactly as in the integer model:
    # x_ijb - alpha_i <= 0 and x_ijb + alpha_j <= 1
    i, j, b = np.indices((M, M, B)).reshape(3, -1)
    keep = i != j
    i, j, b = i[keep], j[keep], b[keep]
    k = i.size
    x = layout.x_index(i, j, b)
    rows = np.concatenate([np.arange(k), np.arange(k), k + np.arange(k), k + np.arange(k)])
    cols = np.concatenate([x, layout.alpha_index(i), x, layout.alpha_index(j)])
    vals = np.concatenate([np.ones(k), -np.ones(k), np.ones(k), np.ones(k)])
    rhs = np.concatenate([np.zeros(k), np.ones(k)])
    return sp.csr_matrix((vals, (rows, cols)), shape=(2 * k, layout.n)), rhs


def _pairing_rows(layout: VariableLayout):
    """``-sum_{j,b} (x_ijb + x_jib) <= -1`` for every UE i."""
    M, B = layout.M, layout.B
    i, j, b = np.indices((M, M, B)).reshape(3, -1)
    keep = i != j
    i, j, b = i[keep], j[keep], b[keep]
    x = layout.x_index(i, j, b)
    rows = np.concatenate([i, j])
    cols = np.concatenate([x, x])
    A = sp.csr_matrix((-np.ones(rows.size), (rows, cols)), shape=(M, layout.n))
    return A, -np.ones(M)


def _direction_count_rows(layout: VariableLayout):
    """``sum alpha <= B`` and ``sum (1 - alpha) <= B``."""
    M = layout.M
    cols = np.tile(layout.alpha_index(np.arange(M)), 2)
    rows = np.repeat([0, 1], M)
    vals = np.concatenate([np.ones(M), -np.ones(M)])
    A = sp.csr_matrix((vals, (rows, cols)), shape=(2, layout.n))
    return A, np.array([layout.B, layout.B - M], dtype=float)


def _ofdma_rows(layout: VariableLayout):
    M, B = layout.M, layout.B
    i, j, b = np.indices((M, M, B)).reshape(3, -1)
    A = sp.csr_matrix((np.ones(i.size), (b, layout.x_index(i, j, b))), shape=(B, layout.n))
    return A, np.ones(B)


def tau_upper_bounds(rd: np.ndarray, ru: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Per-sample cap on tau: the weakest UE's rate with its best pair on every RB."""
    best = np.maximum(rd.max(axis=2), np.swapaxes(ru, 1, 2).max(axis=2))  # (T, M, B)
    return (best.sum(axis=2) / weights[None, :]).min(axis=1)


def build_stage1_lp(instance: Instance, powers: PowerProfile, *, hd_aggregated: bool = False,
                    pairing_cut: bool = True, rates=None) -> tuple[LpProblem, VariableLayout]:
    """Continuous relaxation with pairing-conservation and direction-count cuts."""
    cfg = instance.config
    layout = VariableLayout(cfg.M, cfg.B, cfg.T)
    rd, ru = clamped_rates(instance, powers) if rates is None else rates
    if rd.shape != (cfg.T, cfg.M, cfg.M, cfg.B):
        raise ValueError("rate tables do not match instance dimensions")
    blocks = [_epigraph_rows(layout, rd, ru, cfg.weights), _hd_rows(layout, hd_aggregated),
              _direction_count_rows(layout)]
    if pairing_cut:
        blocks.append(_pairing_rows(layout))
    A_ub = sp.vstack([blk[0] for blk in blocks], format="csr")
    b_ub = np.concatenate([blk[1] for blk in blocks])
    A_eq, b_eq = _ofdma_rows(layout)
    lb = np.zeros(layout.n)
    ub = np.ones(layout.n)
    diag = np.arange(cfg.M)
    for b in range(cfg.B):
        ub[layout.x_index(diag, diag, b)] = 0.0
    ub[layout.tau_slice] = tau_upper_bounds(rd, ru, cfg.weights)
    c = np.zeros(layout.n)
    c[layout.tau_slice] = 1.0 / cfg.T
    return LpProblem(c, A_ub, b_ub, A_eq, b_eq, lb, ub), layout


def _check_alpha(alpha_fixed, M: int, B: int) -> np.ndarray:
    alpha = np.asarray(alpha_fixed)
    if alpha.shape != (M,) or not np.isin(alpha, (0, 1)).all():
        raise ValueError("alpha_fixed must be a binary vector of length M")
    if 0 < M - 1 and alpha.sum() in (0, M):
        raise ValueError("alpha_fixed must put at least one UE on each side")
    return alpha.astype(int)


def build_stage2_lp(instance: Instance, powers: PowerProfile, alpha_fixed, fixed_rbs=None, *,
                    pairing_cut: bool = True, rates=None) -> tuple[LpProblem, VariableLayout]:
    """Stage-1 relaxation with directions pinned and some RB blocks rounded.

    ``fixed_rbs`` maps an RB to its pinned ``(dl, ul)`` pair.  With alpha fixed
    the per-(i, j, b) direction rows reduce to column bounds, which is how they
    are emitted here, and the side-count rows involve constants only, so they
    are left out.  A side holding more than ``B`` UEs therefore shows up as an
    infeasible pairing cut rather than as a malformed problem.
    """
    cfg = instance.config
    M, B = cfg.M, cfg.B
    alpha = _check_alpha(alpha_fixed, M, B)
    fixed_rbs = dict(fixed_rbs or {})
    layout = VariableLayout(M, B, cfg.T)
    rd, ru = clamped_rates(instance, powers) if rates is None else rates
    blocks = [_epigraph_rows(layout, rd, ru, cfg.weights)]
    if pairing_cut:
        blocks.append(_pairing_rows(layout))
    A_ub = sp.vstack([blk[0] for blk in blocks], format="csr")
    b_ub = np.concatenate([blk[1] for blk in blocks])
    A_eq, b_eq = _ofdma_rows(layout)
    allowed = (alpha[:, None] == 1) & (alpha[None, :] == 0)  # dl i, ul j
    x_ub = np.repeat(allowed[:, :, None], B, axis=2).astype(float)
    x_lb = np.zeros((M, M, B))
    for b, (i, j) in fixed_rbs.items():
        if not 0 <= b < B:
            raise ValueError(f"RB {b} out of range")
        if not allowed[i, j]:
            raise ValueError(f"pinned pair ({i}, {j}) on RB {b} conflicts with alpha_fixed")
        x_ub[:, :, b] = 0.0
        x_ub[i, j, b] = 1.0
        x_lb[i, j, b] = 1.0
    lb = np.concatenate([x_lb.ravel(), alpha, np.zeros(cfg.T)]).astype(float)
    ub = np.concatenate([x_ub.ravel(), alpha, tau_upper_bounds(rd, ru, cfg.weights)]).astype(float)
    c = np.zeros(layout.n)
    c[layout.tau_slice] = 1.0 / cfg.T
    return LpProblem(c, A_ub, b_ub, A_eq, b_eq, lb, ub), layout


def apply_lq_linearization(base: LpProblem, layout: VariableLayout, weights: IrmWeights,
                           include_alpha_terms: bool) -> LpProblem:
    """Subtract the first-order model of the lq penalty from the objective.

    The constant from the ``(1 - alpha)`` terms is dropped; the feasible set is
    untouched.
    """
    c = base.c.copy()
    c[layout.x_slice] -= weights.rho1 * weights.q * np.asarray(weights.W).ravel()
    if include_alpha_terms:
        c[layout.alpha_slice] -= weights.rho2 * weights.q * (weights.w_a - weights.w_b)
    return base.with_objective(c)


def lq_objective(layout: VariableLayout, v: np.ndarray, rho1, rho2, eps1, eps2, q,
                 include_alpha_terms: bool) -> float:
    """Exact lq-regularised objective at ``v`` (penalty over every x entry)."""
    x, alpha, tau = layout.unpack(v)
    x = np.clip(x, 0.0, 1.0)
    alpha = np.clip(alpha, 0.0, 1.0)
    val = tau.mean() - rho1 * np.sum((x + eps1) ** q)
    if include_alpha_terms:
        val -= rho2 * np.sum((alpha + eps2) ** q + (1 - alpha + eps2) ** q)
    return float(val)
