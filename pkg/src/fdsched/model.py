"""Domain types, rate formulas and the max-min fairness objective.

Index conventions used throughout the package (all 0-based):

* ``x[i, j, b] == 1`` means UE ``i`` receives downlink and UE ``j`` transmits
  uplink on RB ``b``.
* ``f[j, i, b]`` is the power gain from uplink UE ``j`` to downlink UE ``i``.
* Rate tables ``rd[t, i, j, b]`` / ``ru[t, i, j, b]`` hold the downlink rate of
  ``i`` and the uplink rate of ``j`` when the pair ``(i, j)`` sits on RB ``b``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

RATE_FLOOR = 1e-12


def db_to_linear(value_db: float) -> float:
    return float(10.0 ** (value_db / 10.0))


def dbm_to_watts(value_dbm: float) -> float:
    return float(10.0 ** ((value_dbm - 30.0) / 10.0))


def _frozen(a, dtype=float) -> np.ndarray:
    arr = np.array(a, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class SystemConfig:
    """Static cell parameters. Powers and noise are in watts, gains linear."""

    num_ues: int
    num_rbs: int
    num_samples: int
    p_bs_max: float
    p_ue_max: float
    noise_bs: float
    noise_ue: np.ndarray
    si_gain: np.ndarray
    weights: np.ndarray = None

    def __post_init__(self):
        M, B, T = self.num_ues, self.num_rbs, self.num_samples
        if min(M, B, T) < 1:
            raise ValueError("num_ues, num_rbs and num_samples must be positive")
        if M > 2 * B:
            raise ValueError(f"need M <= 2B, got M={M}, B={B}")
        noise_ue = np.broadcast_to(np.asarray(self.noise_ue, float), (M,))
        si_gain = np.broadcast_to(np.asarray(self.si_gain, float), (B,))
        weights = np.ones(M) if self.weights is None else np.broadcast_to(
            np.asarray(self.weights, float), (M,))
        object.__setattr__(self, "noise_ue", _frozen(noise_ue))
        object.__setattr__(self, "si_gain", _frozen(si_gain))
        object.__setattr__(self, "weights", _frozen(weights))
        if min(self.p_bs_max, self.p_ue_max) < 0 or np.any(si_gain < 0):
            raise ValueError("powers and SI gains must be non-negative")
        # noise enters rate denominators
        if self.noise_bs <= 0 or np.any(noise_ue <= 0):
            raise ValueError("noise powers must be strictly positive")
        if np.any(weights <= 0):
            raise ValueError("weights must be strictly positive")

    @property
    def M(self) -> int:
        return self.num_ues

    @property
    def B(self) -> int:
        return self.num_rbs

    @property
    def T(self) -> int:
        return self.num_samples


@dataclass(frozen=True)
class ChannelSample:
    """One CSI realisation: linear power gains |h|^2, |g|^2 and |f|^2."""

    h: np.ndarray
    g: np.ndarray
    f: np.ndarray

    def __post_init__(self):
        for name in ("h", "g", "f"):
            arr = _frozen(getattr(self, name))
            if np.any(arr < 0) or not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} gains must be finite and non-negative")
            object.__setattr__(self, name, arr)
        M, B = self.h.shape
        if self.g.shape != (M, B) or self.f.shape != (M, M, B):
            raise ValueError("inconsistent channel sample shapes")


@dataclass(frozen=True)
class Instance:
    config: SystemConfig
    samples: tuple
    seed: int = 0

    def __post_init__(self):
        samples = tuple(self.samples)
        object.__setattr__(self, "samples", samples)
        cfg = self.config
        if len(samples) != cfg.T:
            raise ValueError(f"expected {cfg.T} samples, got {len(samples)}")
        for s in samples:
            if s.h.shape != (cfg.M, cfg.B):
                raise ValueError("sample shape does not match config")

    # stacked (T, ...) views for vectorised rate evaluation
    @cached_property
    def h(self) -> np.ndarray:
        return np.stack([s.h for s in self.samples])

    @cached_property
    def g(self) -> np.ndarray:
        return np.stack([s.g for s in self.samples])

    @cached_property
    def f(self) -> np.ndarray:
        return np.stack([s.f for s in self.samples])


@dataclass(frozen=True)
class Schedule:
    """Binary TDA vector ``alpha`` (1 = downlink) and pairing tensor ``x``."""

    alpha: np.ndarray
    x: np.ndarray

    def __post_init__(self):
        alpha = _frozen(np.rint(self.alpha), dtype=np.int8)
        x = _frozen(np.rint(self.x), dtype=np.int8)
        if x.ndim != 3 or x.shape[0] != x.shape[1] or alpha.shape != (x.shape[0],):
            raise ValueError("schedule shapes must be alpha (M,) and x (M, M, B)")
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "x", x)

    @property
    def pairs(self) -> list[tuple[int, int, int]]:
        """Active ``(dl, ul, rb)`` triples sorted by RB."""
        i, j, b = np.nonzero(self.x)
        return sorted(zip(i.tolist(), j.tolist(), b.tolist()), key=lambda p: (p[2], p[0], p[1]))

    @classmethod
    def from_pairs(cls, alpha: Sequence[int], pairs, num_rbs: int) -> "Schedule":
        M = len(alpha)
        x = np.zeros((M, M, num_rbs), dtype=np.int8)
        for i, j, b in pairs:
            x[i, j, b] = 1
        return cls(np.asarray(alpha), x)


@dataclass(frozen=True)
class PowerProfile:
    p_dl: np.ndarray  # (T, B)
    p_ul: np.ndarray  # (T, M, B)

    def __post_init__(self):
        object.__setattr__(self, "p_dl", _frozen(self.p_dl))
        object.__setattr__(self, "p_ul", _frozen(self.p_ul))
        if np.any(self.p_dl < 0) or np.any(self.p_ul < 0):
            raise ValueError("powers must be non-negative")

    def within_budget(self, config: SystemConfig, tol: float = 1e-9) -> bool:
        return bool(np.all(self.p_dl.sum(axis=1) <= config.p_bs_max * (1 + tol) + tol)
                    and np.all(self.p_ul.sum(axis=2) <= config.p_ue_max * (1 + tol) + tol))


@dataclass(frozen=True)
class FeasibilityReport:
    ofdma_ok: bool
    hd_ok: bool
    pairing_ok: bool
    violating_ues: list = field(default_factory=list)

    @property
    def feasible(self) -> bool:
        return self.ofdma_ok and self.hd_ok and self.pairing_ok


def pair_rates(sample: ChannelSample, i: int, j: int, b: int, p_d: float, p_u: float,
               config: SystemConfig) -> tuple[float, float]:
    """Downlink rate of ``i`` and uplink rate of ``j`` sharing RB ``b``."""
    if i == j:
        raise ValueError("a UE cannot be paired with itself")
    if p_d < 0 or p_u < 0:
        raise ValueError("powers must be non-negative")
    sinr_d = p_d * sample.h[i, b] / (p_u * sample.f[j, i, b] + config.noise_ue[i])
    sinr_u = p_u * sample.g[j, b] / (p_d * config.si_gain[b] + config.noise_bs)
    return float(np.log2(1.0 + sinr_d)), float(np.log2(1.0 + sinr_u))


def rate_tables(instance: Instance, power: PowerProfile) -> tuple[np.ndarray, np.ndarray]:
    """All pair rates ``(rd, ru)``, each shaped (T, M, M, B), diagonal zeroed."""
    cfg = instance.config
    h, g, f = instance.h, instance.g, instance.f
    p_d = power.p_dl[:, None, None, :]          # (T,1,1,B)
    p_u = power.p_ul[:, None, :, :]             # (T,1,M,B), indexed by uplink j
    f_ji = np.swapaxes(f, 1, 2)                 # f_ji[t, i, j, b] = f[t, j, i, b]
    rd = np.log2(1.0 + p_d * h[:, :, None, :] / (p_u * f_ji + cfg.noise_ue[None, :, None, None]))
    ru = np.log2(1.0 + p_u * g[:, None, :, :]
                 / (p_d * cfg.si_gain[None, None, None, :] + cfg.noise_bs))
    ru = np.broadcast_to(ru, rd.shape).copy()
    diag = np.arange(cfg.M)
    rd[:, diag, diag, :] = 0.0
    ru[:, diag, diag, :] = 0.0
    return rd, ru


def ue_rates_from_tables(x: np.ndarray, rd: np.ndarray, ru: np.ndarray) -> np.ndarray:
    """Per-sample per-UE rates (T, M) for a (possibly fractional) pairing tensor."""
    x = np.asarray(x, float)
    return np.einsum("ijb,tijb->ti", x, rd) + np.einsum("jib,tjib->ti", x, ru)


def ue_rates(schedule: Schedule, instance: Instance, power: PowerProfile) -> np.ndarray:
    rd, ru = rate_tables(instance, power)
    return ue_rates_from_tables(schedule.x, rd, ru)


def ue_rate(schedule: Schedule, sample: ChannelSample, p_dl: np.ndarray, p_ul: np.ndarray,
            i: int, config: SystemConfig) -> float:
    """Rate of UE ``i`` in one sample given that sample's powers (B,) and (M, B)."""
    total = 0.0
    for dl, ul, b in schedule.pairs:
        if i not in (dl, ul):
            continue
        r_d, r_u = pair_rates(sample, dl, ul, b, p_dl[b], p_ul[ul, b], config)
        total += r_d if i == dl else r_u
    return total


def mmf_from_rates(rates: np.ndarray, weights: np.ndarray) -> float:
    """Sample-average of the weighted minimum rate for a (T, M) rate matrix."""
    return float(np.mean(np.min(rates / weights[None, :], axis=1)))


def mmf_objective(schedule: Schedule, instance: Instance, power: PowerProfile) -> float:
    cfg = instance.config
    if schedule.x.shape != (cfg.M, cfg.M, cfg.B):
        raise ValueError("schedule does not match instance dimensions")
    covered = schedule.x.sum(axis=(1, 2)) + schedule.x.sum(axis=(0, 2))
    if np.any(covered == 0):
        return 0.0
    return mmf_from_rates(ue_rates(schedule, instance, power), cfg.weights)


def check_schedule(schedule: Schedule, config: SystemConfig) -> FeasibilityReport:
    """Evaluate each constraint family separately; never raises on violation."""
    M, B = config.M, config.B
    x, alpha = schedule.x.astype(int), schedule.alpha.astype(int)
    if x.shape != (M, M, B) or alpha.shape != (M,):
        raise ValueError(f"schedule shape {x.shape} does not match M={M}, B={B}")
    ofdma_ok = bool(np.all(x.sum(axis=(0, 1)) == 1) and np.isin(x, (0, 1)).all())
    # x_ijb <= alpha_i and x_ijb <= 1 - alpha_j (this also forbids x_iib = 1)
    hd_ok = bool(np.all(x <= alpha[:, None, None]) and np.all(x <= 1 - alpha[None, :, None])
                 and np.isin(alpha, (0, 1)).all())
    covered = x.sum(axis=(1, 2)) + x.sum(axis=(0, 2))
    violating = [int(i) for i in np.flatnonzero(covered < 1)]
    return FeasibilityReport(ofdma_ok, hd_ok, not violating, violating)
