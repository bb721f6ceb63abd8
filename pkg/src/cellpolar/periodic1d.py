"""Implicit upwind finite-volume scheme on the circle R/2piZ.

Face velocities are passed in by the caller: ``u[k]`` is the velocity on the
face between cell ``k`` and cell ``k+1`` (indices mod N), so ``u[-1]`` is the
face shared by the last and first cell.
"""
from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from . import linsys
from .core import Grid1D, random_initial_density


def upwind_flux(u: float, x_minus: float, x_plus: float) -> float:
    if u > 0:
        return u * x_minus
    if u < 0:
        return u * x_plus
    return 0.0


def assemble_heat_matrix(N: int) -> sp.csr_matrix:
    """Periodic discrete Laplacian: 2 on the diagonal, -1 on the off-diagonals and corners."""
    if N < 3:
        raise ValueError("periodic heat matrix needs N >= 3")
    idx = np.arange(N)
    rows = np.concatenate([idx, idx, idx])
    cols = np.concatenate([idx, (idx + 1) % N, (idx - 1) % N])
    vals = np.concatenate([np.full(N, 2.0), np.full(N, -1.0), np.full(N, -1.0)])
    return sp.csr_matrix((vals, (rows, cols)), shape=(N, N))


def assemble_advection_matrix(face_velocities) -> sp.csr_matrix:
    """Upwind advection matrix B with periodic closure.

    Row k applies ``A_up(u[k], rho_k, rho_{k+1}) - A_up(u[k-1], rho_{k-1}, rho_k)``
    using the split u = max(u, 0) + min(u, 0).
    """
    u = np.asarray(face_velocities, dtype=float)
    N = u.size
    up = np.maximum(u, 0.0)
    um = np.minimum(u, 0.0)
    idx = np.arange(N)
    prev = (idx - 1) % N
    nxt = (idx + 1) % N
    rows = np.concatenate([idx, idx, idx, idx])
    cols = np.concatenate([idx, nxt, prev, idx])
    vals = np.concatenate([up, um, -up[prev], -um[prev]])
    # duplicates (N small) are summed by the COO -> CSR conversion
    return sp.csr_matrix((vals, (rows, cols)), shape=(N, N))


def system_matrix(face_velocities, dt: float, dtheta: float, D: float = 1.0, chi: float = 1.0):
    """D*A + chi*dtheta*B + (dtheta^2/dt) I."""
    N = len(face_velocities)
    return (D * assemble_heat_matrix(N)
            + (chi * dtheta) * assemble_advection_matrix(face_velocities)
            + sp.identity(N, format="csr") * (dtheta ** 2 / dt))


def system_bands(face_velocities, dt: float, dtheta: float, D: float = 1.0, chi: float = 1.0):
    """The three periodic bands (sub, main, super) of :func:`system_matrix`."""
    u = np.asarray(face_velocities, dtype=float)
    if u.size < 3:
        raise ValueError("periodic system needs N >= 3")
    w = chi * dtheta
    up = w * np.maximum(u, 0.0)
    um = w * np.minimum(u, 0.0)
    up_prev = np.roll(up, 1)
    um_prev = np.roll(um, 1)
    diag = 2 * D + up - um_prev + dtheta ** 2 / dt
    lower = -D - up_prev
    upper = -D + um
    return lower, diag, upper


def step(rho, face_velocities, dt: float, dtheta: float, D: float = 1.0, chi: float = 1.0,
         tol: float = linsys.DEFAULT_TOL, solver=None) -> np.ndarray:
    """One implicit step; raises :class:`linsys.SolverFailure` if the solve misses ``tol``."""
    if dt <= 0 or dtheta <= 0:
        raise ValueError("dt and dtheta must be > 0")
    rho = np.asarray(rho, dtype=float)
    rhs = (dtheta ** 2 / dt) * rho
    if solver is not None:
        return linsys.checked_solve(system_matrix(face_velocities, dt, dtheta, D, chi), rhs, tol, solver)
    return linsys.checked_tridiagonal(*system_bands(face_velocities, dt, dtheta, D, chi), rhs, tol,
                                      cyclic=True)


class PeriodicModel:
    """Density on the circle transported by a constant face velocity ``chi * S``.

    The periodic scheme carries no marker-to-velocity coupling of its own, so
    the runnable model is passive transport plus diffusion.
    """

    has_boundary = False

    def __init__(self, config):
        self.config = config
        self.grid = Grid1D.periodic(config.N_theta)
        self.u = np.full(self.grid.N, config.S)

    def initial_state(self):
        field = random_initial_density(self.grid, self.config.M, self.config.seed)
        return np.array(field.values)

    def advance(self, rho):
        c = self.config
        return step(rho, self.u, c.dt, self.grid.delta, c.D, c.chi, c.solver_tol)

    def masses(self, rho):
        return float(rho.sum() * self.grid.delta), 0.0

    def sup_values(self, rho):
        return rho

    def dynamic_values(self, rho):
        return rho

    def trace(self, rho):
        return rho

    def snapshot(self, rho):
        return {"theta": self.grid.centers, "rho": rho}, None

