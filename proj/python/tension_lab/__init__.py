"""Random height functions in random environments: exact partition functions,
surface tensions, superadditivity checks, samplers and limit-shape solvers."""

from ._core import (
    InfeasibleError,
    ValidationError,
    concentration_experiment,
    count_boundary,
    count_extensions,
    empirical_gamma,
    ent_annealed,
    ent_fixed,
    ent_free,
    log_partition,
    minimize,
    sample,
    sandwich_check,
    superadditivity_defect,
    tabulate_tension,
    wiener_cover,
)

__all__ = [
    "InfeasibleError",
    "ValidationError",
    "concentration_experiment",
    "count_boundary",
    "count_extensions",
    "empirical_gamma",
    "ent_annealed",
    "ent_fixed",
    "ent_free",
    "log_partition",
    "minimize",
    "sample",
    "sandwich_check",
    "superadditivity_defect",
    "tabulate_tension",
    "wiener_cover",
]

__version__ = "0.1.0"
