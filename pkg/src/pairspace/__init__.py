"""Pair-space tools for Newtonian central configurations."""

__version__ = "0.1.0"

from .core import (
    CollisionError,
    MassVector,
    PairConfiguration,
    PairState,
    RealizabilityError,
    SystemState,
    pairs_from_particles,
)
from .central import Classification, centrality_residual, classify, fit_lambda
from .collinear import CollinearSolution, solve_moulton
from .dziobek import determinant_relations, dziobek_products, shape_admissible
from .dynamics import integrate, conservation_report

__all__ = [
    "Classification",
    "CollinearSolution",
    "CollisionError",
    "MassVector",
    "PairConfiguration",
    "PairState",
    "RealizabilityError",
    "SystemState",
    "centrality_residual",
    "classify",
    "conservation_report",
    "determinant_relations",
    "dziobek_products",
    "fit_lambda",
    "integrate",
    "pairs_from_particles",
    "shape_admissible",
    "solve_moulton",
]
