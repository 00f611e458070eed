"""minkshoot: radial Neumann solutions of the Minkowski-curvature equation by shooting."""

from importlib.metadata import version

__version__ = version("minkshoot")

from minkshoot.curvature_core import (
    CallbackNonlinearity,
    Geometry,
    Nonlinearity,
    PrototypeNonlinearity,
    f_hat,
    phi,
    phi_inv,
)
from minkshoot.ivp_integrator import Trajectory, integrate_ivp
from minkshoot.neumann_eigen import check_hypothesis, eigenvalue
from minkshoot.shooting_solver import Side, SolutionProfile, solve_all, verify_solution

__all__ = [
    "CallbackNonlinearity",
    "Geometry",
    "Nonlinearity",
    "PrototypeNonlinearity",
    "Side",
    "SolutionProfile",
    "Trajectory",
    "check_hypothesis",
    "eigenvalue",
    "f_hat",
    "integrate_ivp",
    "phi",
    "phi_inv",
    "solve_all",
    "verify_solution",
]
