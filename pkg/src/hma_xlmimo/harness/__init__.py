"""Reproducible scenario runs and parameter sweeps."""
from .config import AXES, BASELINES, ConfigError, ExperimentConfig, config_from_dict, load_config, parse_seeds
from .results import emit_results, summarize
from .scenario import ResultRecord, build_scene, planned_labels, run_cell, run_scenario, run_sweep

__all__ = ["AXES", "BASELINES", "ConfigError", "ExperimentConfig", "ResultRecord", "build_scene",
           "config_from_dict", "emit_results", "load_config", "parse_seeds", "planned_labels", "run_cell",
           "run_scenario", "run_sweep", "summarize"]
