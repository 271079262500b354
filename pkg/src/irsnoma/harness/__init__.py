"""Experiment harness: configs, sweeps, persistence and the CLI."""

from .config import ExperimentConfig, load_config, parse_config
from .figures import preset
from .runner import aggregate, audit_results, run

__all__ = ["ExperimentConfig", "aggregate", "audit_results", "load_config", "parse_config",
           "preset", "run"]
