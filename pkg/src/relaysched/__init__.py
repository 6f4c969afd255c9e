"""Scheduling toolkit and slotted-time simulator for half-duplex relay networks."""

from relaysched.coloring import (
    Coloring,
    ColoringError,
    ColoringPlan,
    PlanLink,
    ScheduleMatrix,
    build_plan,
    ec_baseline_color,
    hc_ec_color,
    schedule_matrix,
    validate_coloring,
)
from relaysched.config import ConfigError, ExperimentConfig, load_config, parse_config
from relaysched.engine import SCHEDULERS, SimConfig, SimTrace, run
from relaysched.metrics import MetricsReport, compute_metrics, little_check
from relaysched.policies import (
    PolicyParams,
    SlotDecision,
    WeightState,
    bp_decide,
    initial_weight_state,
    newbp_decide,
    virtual_update,
)
from relaysched.topology import (
    CapacityResult,
    Network,
    capacity,
    capacity_diamond,
    capacity_line,
    link_capacity_from_gain,
    path_capacity,
)

__version__ = "0.1.0"

__all__ = [
    "CapacityResult",
    "Coloring",
    "ColoringError",
    "ColoringPlan",
    "ConfigError",
    "ExperimentConfig",
    "MetricsReport",
    "Network",
    "PlanLink",
    "PolicyParams",
    "SCHEDULERS",
    "ScheduleMatrix",
    "SimConfig",
    "SimTrace",
    "SlotDecision",
    "WeightState",
    "bp_decide",
    "build_plan",
    "capacity",
    "capacity_diamond",
    "capacity_line",
    "compute_metrics",
    "ec_baseline_color",
    "hc_ec_color",
    "initial_weight_state",
    "link_capacity_from_gain",
    "little_check",
    "load_config",
    "newbp_decide",
    "parse_config",
    "path_capacity",
    "run",
    "schedule_matrix",
    "validate_coloring",
    "virtual_update",
]
