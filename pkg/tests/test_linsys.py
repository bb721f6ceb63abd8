import numpy as np
import pytest
import scipy.sparse as sp

from cellpolar import linsys
from cellpolar.periodic1d import assemble_heat_matrix


def gauss_eliminate(a, b):
    """Dense Gaussian elimination with partial pivoting."""
    a = np.array(a, dtype=float)
    b = np.array(b, dtype=float)
    n = len(b)
    for i in range(n):
        p = i + np.argmax(np.abs(a[i:, i]))
        a[[i, p]], b[[i, p]] = a[[p, i]], b[[p, i]]
        for r in range(i + 1, n):
            f = a[r, i] / a[i, i]
            a[r, i:] -= f * a[i, i:]
            b[r] -= f * b[i]
    x = np.zeros(n)
    for i in reversed(range(n)):
        x[i] = (b[i] - a[i, i + 1:] @ x[i + 1:]) / a[i, i]
    return x


def test_identity():
    b = np.array([1.0, -2.0, 3.5])
    x, report = linsys.solve(sp.identity(3), b)
    np.testing.assert_allclose(x, b)
    assert report.converged


def test_two_by_two():
    x, _ = linsys.solve(sp.csr_matrix([[2.0, -1.0], [-1.0, 2.0]]), np.ones(2))
    np.testing.assert_allclose(x, [1.0, 1.0], rtol=1e-14)


def test_shifted_heat_matrix_matches_dense_elimination():
    rng = np.random.default_rng(3)
    a = assemble_heat_matrix(8) + 0.1 * sp.identity(8)
    b = rng.normal(size=8)
    x, report = linsys.solve(a, b)
    oracle = gauss_eliminate(a.toarray(), b)
    assert np.max(np.abs(x - oracle)) <= 1e-10 * np.max(np.abs(oracle))
    assert report.converged and report.residual_norm <= 1e-10 * np.linalg.norm(b)


def test_nonsymmetric_residual_contract():
    rng = np.random.default_rng(4)
    n = 50
    a = sp.random(n, n, density=0.1, random_state=5) + 5 * sp.identity(n)
    b = rng.normal(size=n)
    x, report = linsys.solve(a, b, tol=1e-12)
    assert report.converged
    assert np.linalg.norm(a @ x - b) <= 1e-12 * np.linalg.norm(b)


def test_zero_rhs():
    x, report = linsys.solve(assemble_heat_matrix(5) + sp.identity(5), np.zeros(5))
    assert np.all(x == 0) and report.residual_norm == 0


def test_singular_raises():
    with pytest.raises(linsys.SingularSystemError):
        linsys.solve(assemble_heat_matrix(6), np.arange(6.0))


def test_shape_checks():
    with pytest.raises(ValueError):
        linsys.solve(sp.identity(3), np.ones(4))
    with pytest.raises(ValueError):
        linsys.solve(sp.identity(3), np.ones(3), tol=0)


def test_from_entries():
    m = linsys.from_entries(2, [0, 1, 1], [0, 0, 1], [1.0, 2.0, 3.0])
    np.testing.assert_array_equal(m.toarray(), [[1, 0], [2, 3]])
    with pytest.raises(ValueError):
        linsys.from_entries(2, [0, 0], [1, 1], [1.0, 1.0])
    with pytest.raises(IndexError):
        linsys.from_entries(2, [2], [0], [1.0])


def test_reused_factor_solver_tracks_changing_matrices():
    solver = linsys.ReusedFactorSolver(1e-12)
    rng = np.random.default_rng(0)
    base = assemble_heat_matrix(30) + sp.identity(30)
    for k in range(5):
        a = base + 0.01 * k * sp.diags(rng.random(30))
        b = rng.normal(size=30)
        x, report = solver(a, b)
        assert report.converged
        assert np.linalg.norm(a @ x - b) <= 1e-12 * np.linalg.norm(b)
    assert solver.refactorizations < 5


def test_checked_solve_raises_on_failure():
    rng = np.random.default_rng(1)
    a = sp.csr_matrix(rng.normal(size=(20, 20)) + 10 * np.eye(20))
    # below double-precision rounding, so refinement cannot reach it
    with pytest.raises(linsys.SolverFailure) as info:
        linsys.checked_solve(a, rng.normal(size=20), tol=1e-30)
    assert not info.value.report.converged


@pytest.mark.parametrize("cyclic", [False, True])
@pytest.mark.parametrize("n", [3, 4, 17])
def test_tridiagonal_matches_dense(n, cyclic):
    rng = np.random.default_rng(n)
    lower, upper = -rng.random(n), -rng.random(n)
    diag = 2.5 + rng.random(n)
    if not cyclic:
        lower[0] = upper[-1] = 0.0
    dense = np.diag(diag)
    for i in range(n):
        if cyclic or i > 0:
            dense[i, (i - 1) % n] += lower[i]
        if cyclic or i < n - 1:
            dense[i, (i + 1) % n] += upper[i]
    b = rng.normal(size=n)
    x, report = linsys.solve_tridiagonal(lower, diag, upper, b, cyclic=cyclic)
    assert report.converged
    np.testing.assert_allclose(x, gauss_eliminate(dense, b), rtol=1e-10, atol=1e-12)
