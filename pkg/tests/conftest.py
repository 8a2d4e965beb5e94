import hypothesis
import numpy as np
import pytest

from fdsched.model import ChannelSample, Instance, SystemConfig
from fdsched.power import uniform_power
from fdsched.scenario import ScenarioSpec, generate_instance

hypothesis.settings.register_profile("default", max_examples=40, deadline=None)
hypothesis.settings.register_profile("fast", max_examples=8, deadline=None)
hypothesis.settings.load_profile("default")


def unit_config(M, B, T=1, **kw):
    """Unit gains, unit noise and SI; the setting of the reduction instances."""
    base = dict(num_ues=M, num_rbs=B, num_samples=T, p_bs_max=float(B), p_ue_max=2.0,
                noise_bs=1.0, noise_ue=1.0, si_gain=1.0)
    base.update(kw)
    return SystemConfig(**base)


def unit_sample(M, B, f=0.0):
    return ChannelSample(np.ones((M, B)), np.ones((M, B)), np.full((M, M, B), f))


@pytest.fixture
def small_cell():
    """Seeded M=4, B=2, T=3 cell with its uniform power profile."""
    inst = generate_instance(ScenarioSpec(M=4, B=2, T=3, seed=11))
    return inst, uniform_power(inst.config)


@pytest.fixture
def unit_instance():
    cfg = unit_config(2, 1)
    return Instance(cfg, [unit_sample(2, 1)])


# one line per acceptance criterion, printed after the run
ACCEPTANCE_LINES: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES, key=lambda k: (int(k.split("[")[0]), k)):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])
