import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cellpolar.periodic1d import (assemble_advection_matrix, assemble_heat_matrix, step,
                                  system_bands, system_matrix, upwind_flux)


def test_upwind_flux_examples():
    assert upwind_flux(2, 3, 5) == 6
    assert upwind_flux(-1, 3, 5) == -5
    assert upwind_flux(0, 3, 5) == 0


def test_heat_matrix_n3():
    np.testing.assert_array_equal(assemble_heat_matrix(3).toarray(),
                                  [[2, -1, -1], [-1, 2, -1], [-1, -1, 2]])


@pytest.mark.parametrize("n", range(3, 65))
def test_heat_matrix_rows_and_symmetry(n):
    a = assemble_heat_matrix(n).toarray()
    np.testing.assert_array_equal(a.sum(axis=1), 0)
    np.testing.assert_array_equal(a, a.T)


def test_heat_matrix_rejects_small_n():
    with pytest.raises(ValueError):
        assemble_heat_matrix(2)


def test_advection_zero_velocity():
    assert assemble_advection_matrix(np.zeros(7)).count_nonzero() == 0


def _flux_difference(u, rho):
    """Direct per-cell evaluation of outgoing minus incoming upwind flux."""
    n = len(u)
    out = np.empty(n)
    for k in range(n):
        right = upwind_flux(u[k], rho[k], rho[(k + 1) % n])
        left = upwind_flux(u[k - 1], rho[k - 1], rho[k])
        out[k] = right - left
    return out


def test_advection_matches_direct_flux_and_constant_action():
    rng = np.random.default_rng(2)
    for n in (3, 4, 11):
        u = rng.normal(size=n)
        rho = rng.random(n)
        b = assemble_advection_matrix(u)
        np.testing.assert_allclose(b @ rho, _flux_difference(u, rho), atol=1e-14)
        np.testing.assert_allclose(b @ np.ones(n), u - np.roll(u, 1), atol=1e-14)


def test_advection_column_sums_vanish():
    rng = np.random.default_rng(11)
    for _ in range(100):
        n = int(rng.integers(3, 40))
        b = assemble_advection_matrix(rng.normal(scale=3, size=n)).toarray()
        assert np.max(np.abs(b.sum(axis=0))) <= 1e-13


@settings(max_examples=40)
@given(st.integers(3, 30), st.integers(0, 2**31), st.floats(1e-4, 1.0))
def test_system_matrix_is_m_matrix(n, seed, dt):
    u = np.random.default_rng(seed).normal(scale=5, size=n)
    dtheta = 2 * np.pi / n
    m = system_matrix(u, dt, dtheta).toarray()
    off = m - np.diag(np.diag(m))
    assert np.all(off <= 0)
    # column dominance (columns sum to the positive shift)
    np.testing.assert_allclose(m.sum(axis=0), dtheta ** 2 / dt)
    lower, diag, upper = system_bands(u, dt, dtheta)
    np.testing.assert_allclose(np.diag(m), diag)
    if n > 3:  # for n = 3 the sub and super bands share entries
        idx = np.arange(n)
        np.testing.assert_allclose(m[idx, (idx + 1) % n], upper)
        np.testing.assert_allclose(m[idx, (idx - 1) % n], lower)


def test_step_keeps_uniform_state():
    rho = np.full(16, 2.0)
    np.testing.assert_allclose(step(rho, np.zeros(16), 0.1, 2 * np.pi / 16), rho, rtol=1e-13)


def test_step_conserves_mass_and_positivity():
    rng = np.random.default_rng(5)
    for _ in range(20):
        n = int(rng.integers(3, 50))
        dtheta = 2 * np.pi / n
        rho = rng.random(n) * (rng.random(n) > 0.5)
        u = rng.normal(scale=10, size=n)
        new = step(rho, u, 10 ** rng.uniform(-4, 0), dtheta, rng.uniform(0.1, 2), rng.uniform(0.1, 2))
        assert abs(new.sum() - rho.sum()) <= 1e-10 * rho.sum()
        assert np.all(new >= 0)


def test_step_rotation_equivariance():
    rng = np.random.default_rng(8)
    n = 24
    rho, u = rng.random(n), rng.normal(size=n)
    a = step(rho, u, 0.01, 2 * np.pi / n)
    b = step(np.roll(rho, 1), np.roll(u, 1), 0.01, 2 * np.pi / n)
    np.testing.assert_allclose(b, np.roll(a, 1), atol=1e-14)


def _constant_drift_error(n, c=1.0, t_end=1.0):
    dtheta = 2 * np.pi / n
    theta = dtheta * np.arange(1, n + 1)
    steps = n // 2
    dt = t_end / steps
    rho = 1 + 0.5 * np.cos(theta)
    u = np.full(n, c)
    for _ in range(steps):
        rho = step(rho, u, dt, dtheta)
    # exact Fourier-mode evolution exp((-m^2 - i c m) t) for m = 1
    exact = 1 + 0.5 * np.exp(-t_end) * np.cos(theta - c * t_end)
    return np.sum(np.abs(rho - exact)) * dtheta


def test_constant_drift_first_order_convergence():
    errors = [_constant_drift_error(n) for n in (64, 128, 256, 512)]
    for coarse, fine in zip(errors, errors[1:]):
        assert 2 / 1.5 <= coarse / fine <= 2 * 1.5
    assert errors[-1] < 2e-2
