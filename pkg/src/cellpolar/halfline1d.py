"""Half-line models on the truncated interval (0, L), membrane at x = 0.

Both models transport markers toward the membrane with speed ``S * a`` where
``a`` is the lagged boundary density (simplified model) or the bound
density mu (exchange model). Diffusion and advection are implicit in rho;
the drift is frozen from already-known data so each step is linear.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np
import scipy.sparse as sp

from . import linsys
from .core import Grid1D


@dataclass(frozen=True)
class HalfLineState:
    rho: np.ndarray
    mu: Optional[float] = None
    t: float = 0.0


def _bands(u_faces, dt, dx, D, chi):
    u = np.asarray(u_faces, dtype=float)
    n = u.size + 1
    up = chi * dx * np.maximum(u, 0.0)
    um = chi * dx * np.minimum(u, 0.0)
    diag = np.full(n, dx * dx / dt)
    diag[:-1] += D + up
    diag[1:] += D - um
    lower = np.zeros(n)
    upper = np.zeros(n)
    lower[1:] = -D - up   # row k+1, column k
    upper[:-1] = -D + um  # row k, column k+1
    return lower, diag, upper


def system_matrix(u_faces, dt: float, dx: float, D: float = 1.0, chi: float = 1.0):
    """Shifted implicit operator scaled by dx^2.

    ``u_faces`` holds the N-1 interior face velocities; both end faces carry
    no advective flux.
    """
    lower, diag, upper = _bands(u_faces, dt, dx, D, chi)
    return sp.diags([lower[1:], diag, upper[:-1]], [-1, 0, 1], format="csr")


def _implicit_step(rho, u, dt, dx, D, chi, boundary_flux=0.0, tol=linsys.DEFAULT_TOL):
    rho = np.asarray(rho, dtype=float)
    faces = np.full(rho.size - 1, u)
    rhs = (dx * dx / dt) * rho
    rhs[0] -= dx * boundary_flux
    return linsys.checked_tridiagonal(*_bands(faces, dt, dx, D, chi), rhs, tol)


def step_simplified(state: HalfLineState, dt: float, grid: Grid1D, D: float = 1.0,
                    chi: float = 1.0, S: float = 1.0, tol: float = linsys.DEFAULT_TOL) -> HalfLineState:
    """Drift toward x = 0 with speed S * rho(first cell) from the previous step; zero flux at both ends."""
    if dt <= 0:
        raise ValueError("dt must be > 0")
    a = S * state.rho[0]
    rho = _implicit_step(state.rho, -a, dt, grid.delta, D, chi, tol=tol)
    return replace(state, rho=rho, t=state.t + dt)


def step_exchange(state: HalfLineState, dt: float, grid: Grid1D, k_on: float = 1.0,
                  k_off: float = 1.0, D: float = 1.0, chi: float = 1.0, S: float = 1.0,
                  tol: float = linsys.DEFAULT_TOL) -> HalfLineState:
    """Explicit Euler for mu, then an implicit rho step driven by the new mu.

    The flux through x = 0 equals (mu_new - mu_old) / dt so the combined
    mass of rho and mu is conserved. Because the attachment is explicit,
    rho stays nonnegative only for dt * k_on <= dx (see
    :func:`max_positive_dt`).
    """
    if dt <= 0:
        raise ValueError("dt must be > 0")
    if k_on <= 0 or k_off <= 0:
        raise ValueError("exchange rates must be > 0")
    mu_old = state.mu
    mu_new = mu_old + dt * (k_on * state.rho[0] - k_off * mu_old)
    rho = _implicit_step(state.rho, -S * mu_new, dt, grid.delta, D, chi,
                         boundary_flux=(mu_new - mu_old) / dt, tol=tol)
    return HalfLineState(rho=rho, mu=mu_new, t=state.t + dt)


def max_positive_dt(grid: Grid1D, k_on: float = 1.0) -> float:
    """Largest exchange step that cannot drain the first cell below zero."""
    return grid.delta / k_on


def steady_profile(M: float):
    """Limit profile x -> (M-1) exp(-(M-1) x) of the exchange model for M > 1."""
    if not M > 1:
        raise ValueError("steady profile needs M > 1")
    a = M - 1.0

    def profile(x):
        return a * np.exp(-a * np.asarray(x, dtype=float))

    return profile


def l1_error_to_profile(rho, grid: Grid1D, M: float) -> float:
    profile = steady_profile(M)
    return float(np.sum(np.abs(np.asarray(rho) - profile(grid.centers))) * grid.delta)


def exponential_density(grid: Grid1D, M: float, width: float) -> np.ndarray:
    """Non-increasing exp(-x / width) profile normalized to discrete mass M."""
    shape = np.exp(-grid.centers / width)
    return shape * (M / (shape.sum() * grid.delta))


DEFAULT_INIT_WIDTH = 5.0


class HalfLineModel:
    has_boundary = False

    def __init__(self, config):
        self.config = config
        self.grid = Grid1D.half_line(config.N_x, config.L)
        self.exchange = config.model == "halfline-exchange"

    def initial_state(self):
        c = self.config
        if c.initial in ("random", "bump"):
            raise ValueError(f"initial={c.initial!r} is not available for half-line models")
        width = c.init_width or DEFAULT_INIT_WIDTH
        if self.exchange:
            if c.mu0 > c.M:
                raise ValueError("mu0 carries more than the total mass M")
            return HalfLineState(exponential_density(self.grid, c.M - c.mu0, width), c.mu0)
        return HalfLineState(exponential_density(self.grid, c.M, width))

    def advance(self, state):
        c = self.config
        if self.exchange:
            return step_exchange(state, c.dt, self.grid, c.k_on, c.k_off, c.D, c.chi, c.S, c.solver_tol)
        return step_simplified(state, c.dt, self.grid, c.D, c.chi, c.S, c.solver_tol)

    def masses(self, state):
        interior = float(state.rho.sum() * self.grid.delta)
        return interior, (float(state.mu) if self.exchange else 0.0)

    def sup_values(self, state):
        return state.rho

    def dynamic_values(self, state):
        if self.exchange:
            return np.append(state.rho, state.mu)
        return state.rho

    def trace(self, state):
        return None

    def snapshot(self, state):
        boundary = {"mu": np.array([state.mu])} if self.exchange else None
        return {"x": self.grid.centers, "rho": state.rho}, boundary
