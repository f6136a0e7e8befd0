"""Experiment driver: trials, regret records, rates, mesh norms and the CLI."""

from .config import ExperimentConfig, load_config
from .experiments import (
    AdversaryResult,
    DivergenceResult,
    adversarial_lower_bound,
    divergence_experiment,
    v0_initial_design,
)
from .mesh import (
    MeshExperiment,
    exact_mesh_norm,
    grid_mesh_norm,
    mesh_norm,
    mesh_stats,
    normalized_mesh,
    random_mesh_experiment,
    trend_test,
)
from .objectives import Objective, build_objective, constant_objective, suite_objectives
from .rates import RateResult, fit_rate, rate_sweep
from .records import GRID_MIN_TOL, MeshStats, RegretRecord
from .trial import run_trial

__all__ = [
    "AdversaryResult",
    "DivergenceResult",
    "ExperimentConfig",
    "GRID_MIN_TOL",
    "MeshExperiment",
    "MeshStats",
    "Objective",
    "RateResult",
    "RegretRecord",
    "adversarial_lower_bound",
    "build_objective",
    "constant_objective",
    "divergence_experiment",
    "exact_mesh_norm",
    "fit_rate",
    "grid_mesh_norm",
    "load_config",
    "mesh_norm",
    "mesh_stats",
    "normalized_mesh",
    "random_mesh_experiment",
    "rate_sweep",
    "run_trial",
    "suite_objectives",
    "trend_test",
    "v0_initial_design",
]
