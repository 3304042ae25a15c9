"""GNSS pseudorange benchmark: simulation, metrics and experiments."""

from .config import load_config, parse_config
from .contours import likelihood_contour_grid, write_contour_csv
from .experiments import (
    CSV_HEADER,
    EstimatorRun,
    RunRecord,
    StaticResult,
    TruncnormCase,
    run_estimator,
    run_experiment,
    run_static_experiment,
    scenario_model,
    truncnorm_comparison,
    write_records_csv,
)
from .gnss import (
    ScenarioConfig,
    Trajectory,
    linearize,
    make_constellation,
    simulate,
    trajectory_prior,
)
from .metrics import nees, rmse

__all__ = [
    "ScenarioConfig",
    "Trajectory",
    "make_constellation",
    "simulate",
    "linearize",
    "trajectory_prior",
    "rmse",
    "nees",
    "RunRecord",
    "EstimatorRun",
    "CSV_HEADER",
    "scenario_model",
    "run_estimator",
    "run_experiment",
    "write_records_csv",
    "StaticResult",
    "run_static_experiment",
    "TruncnormCase",
    "truncnorm_comparison",
    "parse_config",
    "load_config",
    "likelihood_contour_grid",
    "write_contour_csv",
]
