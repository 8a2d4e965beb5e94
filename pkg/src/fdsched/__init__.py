"""Joint direction assignment, user pairing and power allocation for
full-duplex OFDMA cells under max-min fairness."""

from .model import (ChannelSample, FeasibilityReport, Instance, PowerProfile, Schedule,
                    SystemConfig, check_schedule, mmf_objective, rate_tables, ue_rate, ue_rates)
from .power import ScaParams, sca_power, sca_power_profile, uniform_power
from .scenario import ScenarioSpec, ThreeDMInstance, build_reduction_instance, generate_instance
from .schedulers import (SCHEDULERS, IrmParams, SchedulerResult, heuristic_schedule, irm_solve,
                         round_alpha, round_x_per_rb, solve_2s_irmgr, solve_2s_sr, solve_2s_srgr,
                         solve_sr, solve_stage1)

__version__ = "0.1.0"

__all__ = [
    "ChannelSample", "FeasibilityReport", "Instance", "PowerProfile", "Schedule", "SystemConfig",
    "check_schedule", "mmf_objective", "rate_tables", "ue_rate", "ue_rates",
    "ScaParams", "sca_power", "sca_power_profile", "uniform_power",
    "ScenarioSpec", "ThreeDMInstance", "build_reduction_instance", "generate_instance",
    "SCHEDULERS", "IrmParams", "SchedulerResult", "heuristic_schedule", "irm_solve",
    "round_alpha", "round_x_per_rb", "solve_2s_irmgr", "solve_2s_sr", "solve_2s_srgr",
    "solve_sr", "solve_stage1",
]
