"""Per-frame offload/NPU scheduling for mobile video analytics."""

from .baselines import PolicyId, optimal_oracle
from .executor import FrameOutcome
from .profiles import EnvProfile, Frame, FrameSource, ModelProfile, gen_frames, load_profiles
from .sched import Placement, ScheduleDecision, acc_dp_fill, max_accuracy_round, max_utility_round
from .sim import SimConfig, SimReport, check_schedule, run

__version__ = "0.1.0"

__all__ = [
    "EnvProfile", "Frame", "FrameOutcome", "FrameSource", "ModelProfile", "Placement", "PolicyId",
    "ScheduleDecision", "SimConfig", "SimReport", "acc_dp_fill", "check_schedule", "gen_frames",
    "load_profiles", "max_accuracy_round", "max_utility_round", "optimal_oracle", "run",
]
