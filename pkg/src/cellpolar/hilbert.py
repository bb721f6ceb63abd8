"""Nonlocal boundary equation d_t nu = D nu'' + chi S (nu H(nu))' on the circle.

H is the periodic Hilbert transform (conjugate function), used here as a
stand-in for the transform on the real line.
"""
from __future__ import annotations

import math

import numpy as np

from . import linsys
from .core import Grid1D, random_initial_density
from .periodic1d import step as periodic_step


def discrete_hilbert(f) -> np.ndarray:
    """Fourier multiplier -i sgn(m); the zero and Nyquist modes are dropped.

    With this sign H(cos) = sin, matching the kernel (1/pi) p.v. int f(x)/(y-x) dx.
    """
    f = np.asarray(f, dtype=float)
    n = f.size
    if n % 2:
        raise ValueError("discrete Hilbert transform needs an even number of samples")
    coeffs = np.fft.rfft(f)
    coeffs *= -1j
    coeffs[0] = 0.0
    coeffs[-1] = 0.0
    return np.fft.irfft(coeffs, n)


def critical_mass(D: float, S: float, chi: float) -> float:
    if min(D, S, chi) <= 0:
        raise ValueError("D, S and chi must be > 0")
    return 2 * math.pi * D / (S * chi)


def face_velocities(nu, S: float = 1.0, chi: float = 1.0) -> np.ndarray:
    """Face speeds -chi*S*H(nu), averaged from the two adjacent cells.

    The returned values exclude chi (it is applied by the periodic step), so
    this is -S * mean(H(nu)_k, H(nu)_{k+1}).
    """
    h = discrete_hilbert(nu)
    return -S * 0.5 * (h + np.roll(h, -1))


def step_heuristic(nu, dt: float, D: float = 1.0, S: float = 1.0, chi: float = 1.0,
                   tol: float = linsys.DEFAULT_TOL, solver=None) -> np.ndarray:
    """Implicit diffusion and upwind transport with face speeds frozen at the old nu."""
    nu = np.asarray(nu, dtype=float)
    dy = 2 * np.pi / nu.size
    return periodic_step(nu, face_velocities(nu, S), dt, dy, D, chi, tol, solver)


def bump_density(grid: Grid1D, M: float, width: float) -> np.ndarray:
    """Single periodic bump exp(cos(theta - pi) / width^2), normalized to mass M."""
    shape = np.exp((np.cos(grid.centers - np.pi) - 1.0) / width ** 2)
    return shape * (M / (shape.sum() * grid.delta))


DEFAULT_BUMP_WIDTH = 0.3


class HilbertModel:
    has_boundary = True

    def __init__(self, config):
        self.config = config
        if config.N_theta % 2:
            raise ValueError("hilbert model needs an even N_theta")
        self.grid = Grid1D.periodic(config.N_theta)

    def initial_state(self):
        c = self.config
        if c.initial == "random":
            return np.array(random_initial_density(self.grid, c.M, c.seed).values)
        if c.initial == "exponential":
            raise ValueError("initial='exponential' is not available for the hilbert model")
        return bump_density(self.grid, c.M, c.init_width or DEFAULT_BUMP_WIDTH)

    def advance(self, nu):
        c = self.config
        return step_heuristic(nu, c.dt, c.D, c.S, c.chi, c.solver_tol)

    def masses(self, nu):
        return float(nu.sum() * self.grid.delta), 0.0

    def sup_values(self, nu):
        return nu

    def dynamic_values(self, nu):
        return nu

    def trace(self, nu):
        return nu

    def snapshot(self, nu):
        return {"theta": self.grid.centers, "nu": nu}, None
