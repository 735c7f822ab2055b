"""Config-driven experiment runs and result tables."""

from .config import ExperimentConfig, load_config, save_config
from .experiments import run_abcd, run_coverage, run_fig1, run_fig2, run_measure, run_simulate
from .io import emit_results, read_table
