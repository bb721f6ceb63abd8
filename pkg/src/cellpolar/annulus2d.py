"""Polar finite-volume scheme on the annulus [R_min, R_max] x R/2piZ.

The transported unknown is the scaled density ``P = r * rho`` on cells
(j, k), stored as an (N_r, N_theta) array and flattened row-major
(index ``j * N_theta + k``). The outer circle is the active membrane.

All operators are assembled in the dr^2-scaled form

    (D * Arig + chi * dr * Badv + dr^2/dt * I) P_new = dr^2/dt * P_old + dr * F_out

where the angular blocks carry (dr/dtheta)^2 and dr/dtheta weights so that
dr != dtheta is handled exactly.
"""
from __future__ import annotations

import functools
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.sparse as sp

from . import linsys
from .core import AnnulusGrid, random_initial_density
from .periodic1d import assemble_heat_matrix


@dataclass(frozen=True)
class AnnulusState:
    rho_tilde: np.ndarray
    mu: Optional[np.ndarray] = None
    t: float = 0.0


@dataclass(frozen=True)
class DriftField:
    """Face velocities.

    ``u_radial[f, k]`` lives on radial face f (f = 0 is R_min, f = N_r is
    R_max); ``u_angular[j, k]`` on the face between angular cells k and k+1
    of ring j.
    """

    u_radial: np.ndarray
    u_angular: np.ndarray


def _radial_matrix(grid: AnnulusGrid) -> sp.csr_matrix:
    r = grid.r_centers
    w = grid.r_faces[1:-1]  # interior faces between ring j and j+1
    n = grid.N_r
    main = np.zeros(n)
    main[:-1] += w / r[:-1]
    main[1:] += w / r[1:]
    upper = -w / r[1:]
    lower = -w / r[:-1]
    return sp.diags([lower, main, upper], [-1, 0, 1], format="csr")


def assemble_rigidity(grid: AnnulusGrid) -> sp.csr_matrix:
    """Rigidity matrix: r-weighted radial differences plus (dr/dtheta)^2 A / r_j^2 per ring.

    Zero flux at R_min is built in; the R_max flux is left to the right-hand side.
    """
    ratio2 = (grid.dr / grid.dtheta) ** 2
    radial = sp.kron(_radial_matrix(grid), sp.identity(grid.N_theta), format="csr")
    angular = sp.kron(sp.diags(ratio2 / grid.r_centers ** 2),
                      assemble_heat_matrix(grid.N_theta), format="csr")
    return (radial + angular).tocsr()


@functools.lru_cache(maxsize=8)
def _potential_factor(grid: AnnulusGrid, alpha: float):
    matrix = assemble_rigidity(grid) + alpha * grid.dr ** 2 * sp.identity(grid.size)
    return matrix.tocsr(), linsys.factorize(matrix)


def solve_potential(boundary_data, alpha: float, grid: AnnulusGrid,
                    tol: float = linsys.DEFAULT_TOL) -> np.ndarray:
    """Scaled potential r*c for -Lap c + alpha c = 0 with dc/dr = boundary_data at R_max, 0 at R_min."""
    if not alpha > 0:
        raise ValueError("alpha must be > 0; the pure Neumann problem is ill-posed")
    g = np.asarray(boundary_data, dtype=float)
    if g.shape != (grid.N_theta,):
        raise ValueError("boundary data must have one value per angular cell")
    matrix, factor = _potential_factor(grid, float(alpha))
    rhs = np.zeros(grid.shape)
    rhs[-1] = grid.dr * grid.R_max * g
    x, report = linsys.solve(matrix, rhs.ravel(), tol, factor=factor)
    if not report.converged:
        raise linsys.SolverFailure("potential solve did not converge", report)
    return x.reshape(grid.shape)


def drift_from_potential(c_tilde, grid: AnnulusGrid, boundary_data=None) -> DriftField:
    """u_r = d(c~/r)/dr and u_theta = (1/r) dc~/dtheta by face differences.

    The inner face gets 0 and the outer face the Neumann data, matching the
    potential's flux conditions.
    """
    c_tilde = np.asarray(c_tilde, dtype=float)
    r = grid.r_centers
    c = c_tilde / r[:, None]
    u_r = np.zeros((grid.N_r + 1, grid.N_theta))
    u_r[1:-1] = (c[1:] - c[:-1]) / grid.dr
    if boundary_data is not None:
        u_r[-1] = boundary_data
    u_t = (np.roll(c_tilde, -1, axis=1) - c_tilde) / (r[:, None] * grid.dtheta)
    return DriftField(u_r, u_t)


def drift_transversal(boundary_trace, grid: AnnulusGrid) -> DriftField:
    """Purely radial drift toward the membrane; column k moves with speed trace[k] at every radius."""
    trace = np.asarray(boundary_trace, dtype=float)
    u_r = np.broadcast_to(trace, (grid.N_r + 1, grid.N_theta)).copy()
    return DriftField(u_r, np.zeros(grid.shape))


def step_mu(mu, rho_boundary, dt: float, k_on: float = 1.0, k_off: float = 1.0) -> np.ndarray:
    if dt <= 0:
        raise ValueError("dt must be > 0")
    mu = np.asarray(mu, dtype=float)
    return mu + dt * (k_on * np.asarray(rho_boundary, dtype=float) - k_off * mu)


def _advection_coo(drift: DriftField, grid: AnnulusGrid):
    Nr, Nt = grid.shape
    idx = np.arange(grid.size).reshape(Nr, Nt)
    # radial interior faces
    u = drift.u_radial[1:-1]
    up = np.maximum(u, 0.0).ravel()
    um = np.minimum(u, 0.0).ravel()
    lo = idx[:-1].ravel()
    hi = idx[1:].ravel()
    rows = [lo, lo, hi, hi]
    cols = [lo, hi, lo, hi]
    vals = [up, um, -up, -um]
    # angular faces, periodic in k, weighted by (dr/dtheta) / r_j^2
    weight = (grid.dr / grid.dtheta) / grid.r_centers[:, None] ** 2
    v = drift.u_angular
    vp = (weight * np.maximum(v, 0.0)).ravel()
    vm = (weight * np.minimum(v, 0.0)).ravel()
    here = idx.ravel()
    nxt = np.roll(idx, -1, axis=1).ravel()
    rows += [here, here, nxt, nxt]
    cols += [here, nxt, here, nxt]
    vals += [vp, vm, -vp, -vm]
    return np.concatenate(rows), np.concatenate(cols), np.concatenate(vals)


def assemble_advection(drift: DriftField, grid: AnnulusGrid) -> sp.csr_matrix:
    """Upwind advection operator: radial U+/U- blocks plus (dr/dtheta) B / r_j^2 per ring."""
    rows, cols, vals = _advection_coo(drift, grid)
    return sp.csr_matrix((vals, (rows, cols)), shape=(grid.size, grid.size))


class _Pattern:
    """Fixed sparsity pattern of the step matrix; only values change between steps."""

    def __init__(self, grid: AnnulusGrid):
        self.grid = grid
        n = grid.size
        rig = assemble_rigidity(grid).tocoo()
        zero = DriftField(np.zeros((grid.N_r + 1, grid.N_theta)), np.zeros(grid.shape))
        ar, ac, _ = _advection_coo(zero, grid)
        diag = np.arange(n)
        rows = np.concatenate([rig.row, ar, diag])
        cols = np.concatenate([rig.col, ac, diag])
        keys, self.inverse = np.unique(rows.astype(np.int64) * n + cols, return_inverse=True)
        self.indices = (keys % n).astype(np.int32)
        self.indptr = np.searchsorted(keys // n, np.arange(n + 1)).astype(np.int32)
        self.rigidity = rig.data
        self.nnz = keys.size

    def matrix(self, vals) -> sp.csr_matrix:
        data = np.bincount(self.inverse, weights=vals, minlength=self.nnz)
        return sp.csr_matrix((data, self.indices, self.indptr), shape=(self.grid.size,) * 2)


@functools.lru_cache(maxsize=8)
def _pattern(grid: AnnulusGrid) -> _Pattern:
    return _Pattern(grid)


def system_matrix(drift: DriftField, dt: float, grid: AnnulusGrid, D: float = 1.0,
                  chi: float = 1.0) -> sp.csr_matrix:
    pattern = _pattern(grid)
    _, _, av = _advection_coo(drift, grid)
    vals = np.concatenate([D * pattern.rigidity, chi * grid.dr * av,
                           np.full(grid.size, grid.dr ** 2 / dt)])
    return pattern.matrix(vals)


def step_rho(rho_tilde, drift: DriftField, dt: float, grid: AnnulusGrid, D: float = 1.0,
             chi: float = 1.0, outer_flux=None, tol: float = linsys.DEFAULT_TOL,
             solver=None) -> np.ndarray:
    """One implicit step for r*rho.

    ``outer_flux[k]`` is the flux r*(d rho/dr - rho u_r) through R_max
    (None means zero flux); the inner circle always has zero flux.
    """
    if dt <= 0:
        raise ValueError("dt must be > 0")
    P = np.asarray(rho_tilde, dtype=float)
    rhs = (grid.dr ** 2 / dt) * P
    if outer_flux is not None:
        rhs = rhs.copy()
        rhs[-1] += grid.dr * np.asarray(outer_flux, dtype=float)
    matrix = system_matrix(drift, dt, grid, D, chi)
    return linsys.checked_solve(matrix, rhs.ravel(), tol, solver).reshape(grid.shape)


def max_positive_dt(grid: AnnulusGrid, k_on: float = 1.0) -> float:
    """Largest exchange step that keeps the outer ring nonnegative.

    The explicit attachment removes dt * k_on * R_max * rho_b per unit angle
    while the ring holds dr * r_N * rho_b.
    """
    return grid.dr * grid.r_centers[-1] / (k_on * grid.R_max)


class AnnulusModel:
    """Coupled annulus dynamics: membrane trace -> (mu) -> drift -> rho step."""

    has_boundary = True

    def __init__(self, config):
        self.config = config
        self.grid = AnnulusGrid(config.R_min, config.R_max, config.N_r, config.N_theta)
        self.potential = "potential" in config.model
        self.exchange = config.has_exchange
        self._solver = linsys.ReusedFactorSolver(config.solver_tol)

    def initial_state(self, rho_tilde=None):
        c = self.config
        g = self.grid
        if c.initial not in ("auto", "random"):
            raise ValueError(f"initial={c.initial!r} is not available for annulus models")
        mu = None
        interior = c.M
        if self.exchange:
            mu = np.full(g.N_theta, c.mu0)
            interior = c.M - c.mu0 * 2 * np.pi * g.R_max
            if interior < 0:
                raise ValueError("mu0 carries more than the total mass M")
        if rho_tilde is None:
            rho_tilde = random_initial_density(g, interior, c.seed).values
        return AnnulusState(np.array(rho_tilde, dtype=float), mu)

    def boundary_density(self, state) -> np.ndarray:
        """rho in the outermost ring, r*rho divided by its center radius."""
        return state.rho_tilde[-1] / self.grid.r_centers[-1]

    def drift(self, data) -> DriftField:
        c = self.config
        data = c.S * np.asarray(data)
        if self.potential:
            c_tilde = solve_potential(data, c.alpha, self.grid, c.solver_tol)
            return drift_from_potential(c_tilde, self.grid, data)
        return drift_transversal(data, self.grid)

    def advance(self, state: AnnulusState) -> AnnulusState:
        c = self.config
        rho_b = self.boundary_density(state)
        mu_new = None
        outer_flux = None
        if self.exchange:
            mu_new = step_mu(state.mu, rho_b, c.dt, c.k_on, c.k_off)
            outer_flux = -self.grid.R_max * (mu_new - state.mu) / c.dt
            drift = self.drift(mu_new)
        else:
            drift = self.drift(rho_b)
        P = step_rho(state.rho_tilde, drift, c.dt, self.grid, c.D, c.chi, outer_flux,
                     c.solver_tol, self._solver)
        return AnnulusState(P, mu_new, state.t + c.dt)

    def masses(self, state):
        g = self.grid
        interior = float(state.rho_tilde.sum() * g.dr * g.dtheta)
        boundary = float(state.mu.sum() * g.R_max * g.dtheta) if self.exchange else 0.0
        return interior, boundary

    def sup_values(self, state):
        return state.rho_tilde / self.grid.r_centers[:, None]

    def dynamic_values(self, state):
        rho = self.sup_values(state).ravel()
        return np.concatenate([rho, state.mu]) if self.exchange else rho

    def trace(self, state):
        return state.mu if self.exchange else self.boundary_density(state)

    def snapshot(self, state):
        g = self.grid
        r, theta = np.meshgrid(g.r_centers, g.theta_centers, indexing="ij")
        columns = {"r": r.ravel(), "theta": theta.ravel(), "rho": self.sup_values(state).ravel()}
        boundary = {"theta": g.theta_centers, "mu": state.mu} if self.exchange else None
        return columns, boundary
