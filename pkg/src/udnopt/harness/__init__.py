"""Experiment harness: deterministic figure-style experiments and a CLI."""
from .experiments import (
    ConfigError,
    ExperimentConfig,
    HeatmapGrid,
    Table,
    run_convergence_comparison,
    run_gsbf_demo,
    run_admission_demo,
    run_nmse_curve,
    run_sparse_phase_transition,
    run_tim_phase_transition,
)

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "HeatmapGrid",
    "Table",
    "run_sparse_phase_transition",
    "run_nmse_curve",
    "run_tim_phase_transition",
    "run_convergence_comparison",
    "run_gsbf_demo",
    "run_admission_demo",
]
