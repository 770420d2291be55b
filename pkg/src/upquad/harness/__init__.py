"""Experiment runner, regret evaluation and command-line entry point."""

from .optimum import comparator_grid, grid_optimum, refine_point
from .regret import (
    RegretReport,
    SlopeFit,
    adaptive_regret,
    dynamic_regret,
    fit_regret_slope,
    max_subarray,
    static_alpha_regret,
)

__all__ = [
    "comparator_grid",
    "grid_optimum",
    "refine_point",
    "RegretReport",
    "SlopeFit",
    "adaptive_regret",
    "dynamic_regret",
    "fit_regret_slope",
    "max_subarray",
    "static_alpha_regret",
]
