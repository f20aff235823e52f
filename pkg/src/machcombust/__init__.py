"""Structured-grid simulator for the two-dimensional low-Mach combustion model
``div u = c0 lap(1/rho)`` on a box, with Picard-linearized backward Euler
stepping, invariant diagnostics and a manufactured-solution harness."""

from .grid import Grid, ScalarField, VectorField, make_grid
from .model import FluidState, ModelParams, MuLaw, StepControls, advance, picard_step

__version__ = "0.1.0"

__all__ = [
    "FluidState",
    "Grid",
    "ModelParams",
    "MuLaw",
    "ScalarField",
    "StepControls",
    "VectorField",
    "__version__",
    "advance",
    "make_grid",
    "picard_step",
]
