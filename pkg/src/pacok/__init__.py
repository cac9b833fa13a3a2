"""Energy-stable spectral simulation of the penalized Allen-Cahn-Ohta-Kawasaki flow."""

from .model import EnergyBreakdown, ModelParams, PotentialBounds, energy, forces, potential_bounds
from .solver import NonMonotoneEnergy, Solver, SolverParams, StepReport, precompute_symbol, stability_constants
from .spectral import Field, Grid, GridSpec, Spectrum

__all__ = [
    "EnergyBreakdown",
    "Field",
    "Grid",
    "GridSpec",
    "ModelParams",
    "NonMonotoneEnergy",
    "PotentialBounds",
    "Solver",
    "SolverParams",
    "Spectrum",
    "StepReport",
    "energy",
    "forces",
    "potential_bounds",
    "precompute_symbol",
    "stability_constants",
]

__version__ = "0.1.0"
