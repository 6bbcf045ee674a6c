"""Non-recurrence laboratory for the 2D Euler equation on the annulus 1 <= |x| <= 2."""

from .besov import BesovShellTransformer, TorusField, besov_norm, embedding_check, sobolev_norm
from .biot_savart import VelocityReconstructor, eval_vhat, eval_vtilde, grid_velocity, solve_velocity
from .boundary_integral import MomentSolver, NeumannData, solve_moment
from .euler_sim import SimConfig, SimState, conservation_report, run, step
from .exceptions import (
    AnnulusError,
    CFLViolation,
    ConstraintViolation,
    GridMismatch,
    MarkerEscape,
    RefinementExplosion,
    SimulationDiverged,
    Unsolvable,
    ValidationError,
)
from .geometry import PolarGrid, ScalarField, boundary_quadrature, c0_norm, c1_norm, make_grid
from .lagrangian import MaterialLine, Patch, advect_line, advect_points, patch_area, winding_separation
from .measure_recurrence import FiniteSystem, an_set_check, recurrence_statistics
from .pendulum import PendulumState, classify_orbit, pendulum_step, recurrence_time
from .recurrence_lab import ExperimentReport, XiSpec, build_xi, distance_series, nonrecurrence_experiment

__version__ = "0.1.0"

__all__ = [
    "AnnulusError", "BesovShellTransformer", "CFLViolation", "ConstraintViolation", "ExperimentReport",
    "FiniteSystem", "GridMismatch", "MarkerEscape", "MaterialLine", "MomentSolver", "NeumannData", "Patch",
    "PendulumState", "PolarGrid", "RefinementExplosion", "ScalarField", "SimConfig", "SimState",
    "SimulationDiverged", "TorusField", "Unsolvable", "ValidationError", "VelocityReconstructor", "XiSpec",
    "advect_line", "advect_points", "an_set_check", "besov_norm", "boundary_quadrature", "build_xi",
    "c0_norm", "c1_norm", "classify_orbit", "conservation_report", "distance_series", "embedding_check",
    "eval_vhat", "eval_vtilde", "grid_velocity", "make_grid", "nonrecurrence_experiment", "patch_area",
    "pendulum_step", "recurrence_statistics", "recurrence_time", "run", "sobolev_norm", "solve_moment",
    "solve_velocity", "step", "winding_separation",
]
