"""Random cell instances and the 3-dimensional-matching reduction fixture."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .model import ChannelSample, Instance, SystemConfig, db_to_linear, dbm_to_watts

MIN_DISTANCE_KM = 0.01


def path_loss_db(d_km):
    """Urban macro path loss in dB for a distance in km."""
    return 140.7 + 36.7 * np.log10(d_km)


@dataclass(frozen=True)
class ScenarioSpec:
    M: int
    B: int
    T: int = 10
    cell_radius: float = 0.1
    p_bs_dbm: float = 30.0
    p_ue_dbm: float = 23.0
    noise_dbm: float = -90.0
    si_db: float = -110.0
    seed: int = 0

    def __post_init__(self):
        if self.cell_radius <= 0:
            raise ValueError("cell_radius must be positive")
        if min(self.M, self.B, self.T) < 1:
            raise ValueError("M, B and T must be positive")
        if self.M > 2 * self.B:
            raise ValueError(f"need M <= 2B, got M={self.M}, B={self.B}")

    def replace(self, **changes) -> "ScenarioSpec":
        return dataclasses.replace(self, **changes)

    def to_config(self) -> SystemConfig:
        return SystemConfig(
            num_ues=self.M, num_rbs=self.B, num_samples=self.T,
            p_bs_max=dbm_to_watts(self.p_bs_dbm), p_ue_max=dbm_to_watts(self.p_ue_dbm),
            noise_bs=dbm_to_watts(self.noise_dbm), noise_ue=dbm_to_watts(self.noise_dbm),
            si_gain=db_to_linear(self.si_db))

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), indent=2)

    @classmethod
    def from_dict(cls, data: dict) -> "ScenarioSpec":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown scenario keys: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def from_json(cls, text: str) -> "ScenarioSpec":
        return cls.from_dict(json.loads(text))

    @classmethod
    def load(cls, path: str | Path) -> "ScenarioSpec":
        return cls.from_json(Path(path).read_text())


def _rayleigh_power(rng: np.random.Generator, shape) -> np.ndarray:
    """|zeta|^2 for zeta ~ CN(0, 1); exact zeros are redrawn."""
    z = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)
    p = np.abs(z) ** 2
    while np.any(p == 0.0):
        bad = p == 0.0
        z = (rng.standard_normal(bad.sum()) + 1j * rng.standard_normal(bad.sum())) / np.sqrt(2.0)
        p[bad] = np.abs(z) ** 2
    return p


def ue_positions(spec: ScenarioSpec, rng: np.random.Generator) -> np.ndarray:
    """Uniform positions (km) in the disk around the BS at the origin."""
    r = spec.cell_radius * np.sqrt(rng.random(spec.M))
    theta = 2 * np.pi * rng.random(spec.M)
    return np.column_stack([r * np.cos(theta), r * np.sin(theta)])


def generate_instance(spec: ScenarioSpec) -> Instance:
    """Draw UE drops and ``T`` frequency-selective Rayleigh samples.

    Streams are split from ``spec.seed``: child 0 draws the positions, child
    ``t + 1`` draws sample ``t``.
    """
    config = spec.to_config()
    M, B = spec.M, spec.B
    children = np.random.SeedSequence(spec.seed).spawn(spec.T + 1)
    pos = ue_positions(spec, np.random.default_rng(children[0]))
    d_bs = np.maximum(np.hypot(pos[:, 0], pos[:, 1]), MIN_DISTANCE_KM)
    d_ue = np.linalg.norm(pos[:, None, :] - pos[None, :, :], axis=2)
    d_ue = np.maximum(d_ue, MIN_DISTANCE_KM)
    gain_bs = 10.0 ** (-path_loss_db(d_bs) / 10.0)
    gain_ue = 10.0 ** (-path_loss_db(d_ue) / 10.0)
    samples = []
    for t in range(spec.T):
        rng = np.random.default_rng(children[t + 1])
        h = gain_bs[:, None] * _rayleigh_power(rng, (M, B))
        g = gain_bs[:, None] * _rayleigh_power(rng, (M, B))
        # reciprocal UE-UE links: one draw per unordered pair
        iu, ju = np.triu_indices(M, 1)
        draws = _rayleigh_power(rng, (iu.size, B))
        fade = np.ones((M, M, B))
        fade[iu, ju] = draws
        fade[ju, iu] = draws
        f = gain_ue[:, :, None] * fade
        samples.append(ChannelSample(h, g, f))
    return Instance(config, samples, spec.seed)


# ---------------------------------------------------------------------------
# 3-dimensional matching reduction


@dataclass(frozen=True)
class ThreeDMInstance:
    """Triples ``(x, y, z)`` are 1-based, each coordinate in ``1..K``."""

    K: int
    triples: frozenset

    def __post_init__(self):
        if self.K < 1:
            raise ValueError("K must be positive")
        triples = frozenset(tuple(int(v) for v in t) for t in self.triples)
        for t in triples:
            if len(t) != 3 or not all(1 <= v <= self.K for v in t):
                raise ValueError(f"triple {t} out of range for K={self.K}")
        object.__setattr__(self, "triples", triples)

    def has_perfect_match(self) -> bool:
        """Brute force over all K-subsets of the triples."""
        from itertools import combinations

        for subset in combinations(sorted(self.triples), self.K):
            if all(len({t[k] for t in subset}) == self.K for k in range(3)):
                return True
        return False


def build_reduction_instance(tdm: ThreeDMInstance) -> tuple[Instance, float]:
    """Single-sample full-load cell that is feasible at rate 1 iff ``tdm`` has a match.

    UEs ``0..K-1`` stand for the X elements, ``K..2K-1`` for Y, RB ``z-1`` for z.
    """
    K = tdm.K
    M, B = 2 * K, K
    f = np.ones((M, M, B))
    for x, y, z in tdm.triples:
        i, j, b = x - 1, K + y - 1, z - 1
        f[j, i, b] = f[i, j, b] = 0.0
    config = SystemConfig(num_ues=M, num_rbs=B, num_samples=1, p_bs_max=float(B),
                          p_ue_max=2.0, noise_bs=1.0, noise_ue=1.0, si_gain=1.0,
                          weights=1.0)
    sample = ChannelSample(np.ones((M, B)), np.ones((M, B)), f)
    return Instance(config, [sample], seed=0), 1.0
