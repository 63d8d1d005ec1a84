"""Fluid-model simulation and stability analysis of congestion control."""

from .core import (
    AgentConfig,
    Link,
    Path,
    Scenario,
    ScenarioError,
    Smoothing,
    UnitConventions,
    build_dumbbell,
    convert_rate,
    link_bdp,
    rate_to_mbps,
    spread_delays,
    validation_dumbbell,
)
from .analysis import EquilibriumReport, analyze, eigenvalues_dense
from .config import ConfigError, load_grid, load_scenario
from .engine import simulate
from .metrics import MetricsReport, Trace, compute_metrics, jain_fairness
from .solver import DdeSystem, NumericalError, SignalHistory, integrate

__version__ = "0.1.0"

__all__ = [
    "AgentConfig",
    "Link",
    "Path",
    "Scenario",
    "ScenarioError",
    "Smoothing",
    "UnitConventions",
    "build_dumbbell",
    "convert_rate",
    "rate_to_mbps",
    "spread_delays",
    "link_bdp",
    "validation_dumbbell",
    "EquilibriumReport",
    "analyze",
    "eigenvalues_dense",
    "ConfigError",
    "load_grid",
    "load_scenario",
    "simulate",
    "MetricsReport",
    "Trace",
    "compute_metrics",
    "jain_fairness",
    "DdeSystem",
    "NumericalError",
    "SignalHistory",
    "integrate",
]
