"""Inverse path: synthesis, spectral estimation, fitting and the scenario pipeline."""

from .fitting import equipartition_temperature, fit_lorentzian
from .langevin import integrate_langevin
from .pipeline import COMMANDS, ScenarioPipeline, run_command
from .synthesis import record_length, run_seed_batch, synthesize_timeseries
from .welch import welch_psd

__all__ = [
    "COMMANDS",
    "ScenarioPipeline",
    "equipartition_temperature",
    "fit_lorentzian",
    "integrate_langevin",
    "record_length",
    "run_command",
    "run_seed_batch",
    "synthesize_timeseries",
    "welch_psd",
]
