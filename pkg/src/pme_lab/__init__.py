"""Numerical laboratory for the slow-diffusion porous medium equation u_t = Δ(u^m), m > 1."""

from .elliptic_profile import GiantProfile, ShootingError, rescale_profile, solve_profile
from .exact_solutions import BarenblattParams, FastBlowupParams, PmeParams
from .pme_solver import Field, Grid1D, NumericalAbort, SolveConfig, Trajectory, solve_ivp
from .reports import CheckReport, ClassLabel, InconclusiveError, Label, RefinementTrend, Verdict

__version__ = "0.1.0"

__all__ = [
    "BarenblattParams",
    "CheckReport",
    "ClassLabel",
    "FastBlowupParams",
    "Field",
    "GiantProfile",
    "Grid1D",
    "InconclusiveError",
    "Label",
    "NumericalAbort",
    "PmeParams",
    "RefinementTrend",
    "ShootingError",
    "SolveConfig",
    "Trajectory",
    "Verdict",
    "rescale_profile",
    "solve_ivp",
    "solve_profile",
]
