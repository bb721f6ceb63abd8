"""Finite-volume simulations of cell-polarisation convection-diffusion models.

Submodules: ``core`` (grids, config, diagnostics), ``linsys`` (sparse solves),
``halfline1d``, ``periodic1d``, ``annulus2d``, ``hilbert`` (the model
solvers), ``runner`` (time loop and sweeps) and ``cli``.
"""
from .core import (AnnulusGrid, BoundaryState, ConfigError, DiagnosticsRecord, Field,
                   Grid1D, SimConfig, blowup_indicator, boundary_fourier_mode,
                   random_initial_density, total_mass)
from .runner import RunSummary, SweepResult, run, sweep

__all__ = [
    "AnnulusGrid", "BoundaryState", "ConfigError", "DiagnosticsRecord", "Field", "Grid1D",
    "SimConfig", "blowup_indicator", "boundary_fourier_mode", "random_initial_density",
    "total_mass", "RunSummary", "SweepResult", "run", "sweep",
]
__version__ = "0.1.0"
