"""Entropic optimal-transport solvers and Lagrangian particle dynamics for
the semigeostrophic shallow-water system on a periodic channel."""

from .geometry import DiscreteMeasure, Domain, Grid, remap_periodic, total_mass
from .sinkhorn import (
    DualPotentials,
    PhysicalParams,
    SolveStats,
    SolverConfig,
    height_from_phi,
    ot_eps_value,
    sinkhorn_divergence,
    solve_swsg_dual,
    symmetric_sinkhorn,
)
from .saddle import SolverError, saddle_ascent_descent, saddle_sinkhorn
from .scenarios import BumpParams, JetParams, csp_check, initial_sigma, scenario_measures
from .dynamics import SimulationState, StepperKind, run, step, velocity_field

__all__ = [
    "BumpParams", "DiscreteMeasure", "Domain", "DualPotentials", "Grid",
    "JetParams", "PhysicalParams", "SimulationState", "SolveStats",
    "SolverConfig", "SolverError", "StepperKind", "csp_check",
    "height_from_phi", "initial_sigma", "ot_eps_value", "remap_periodic",
    "run", "saddle_ascent_descent", "saddle_sinkhorn", "scenario_measures",
    "sinkhorn_divergence", "solve_swsg_dual", "step", "symmetric_sinkhorn",
    "total_mass", "velocity_field",
]
