"""Experiment configuration, ensemble execution, outputs and table reproduction."""

from .config import Bins, ExperimentConfig, load_config
from .io import emit_plot_data, read_spectrum, write_spectrum
from .runner import EnsembleSummary, NumericalFailure, load_summary, realize_params, run_experiment
from .tables import PRESETS, reproduce_tables

__all__ = [
    "Bins", "ExperimentConfig", "load_config",
    "emit_plot_data", "read_spectrum", "write_spectrum",
    "EnsembleSummary", "NumericalFailure", "load_summary", "realize_params", "run_experiment",
    "PRESETS", "reproduce_tables",
]
