"""Configuration-driven experiment runner and command line."""

from .config import PIPELINES, ExperimentConfig
from .runner import ComparisonReport, RunError, convergence_study, run
from .scenarios import SCENARIOS, scenario_config

__all__ = [
    "PIPELINES",
    "ExperimentConfig",
    "ComparisonReport",
    "RunError",
    "convergence_study",
    "run",
    "SCENARIOS",
    "scenario_config",
]
