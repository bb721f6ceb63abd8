"""Sparse linear solves for the implicit steps and the potential problem.

Matrices are ``scipy.sparse`` objects. Every solve checks the relative
residual ``||A x - b|| <= tol * ||b||`` before reporting convergence.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.linalg import solve_banded

DEFAULT_TOL = 1e-10


class SingularSystemError(np.linalg.LinAlgError):
    pass


class SolverFailure(RuntimeError):
    """A solve finished without meeting its residual bound."""

    def __init__(self, message, report):
        super().__init__(message)
        self.report = report


@dataclass(frozen=True)
class SolveReport:
    converged: bool
    iterations: int
    residual_norm: float


def from_entries(n, rows, cols, values) -> sp.csr_matrix:
    """Assemble an n x n matrix from (row, col, value) triples, rejecting duplicates."""
    rows = np.asarray(rows, dtype=int)
    cols = np.asarray(cols, dtype=int)
    values = np.asarray(values, dtype=float)
    if rows.size and (rows.min() < 0 or cols.min() < 0 or rows.max() >= n or cols.max() >= n):
        raise IndexError("matrix entry index out of range")
    if not np.all(np.isfinite(values)):
        raise ValueError("matrix entries must be finite")
    keys = rows * n + cols
    if np.unique(keys).size != keys.size:
        raise ValueError("duplicate (row, col) entry")
    return sp.csr_matrix((values, (rows, cols)), shape=(n, n))


def factorize(matrix):
    """Sparse LU factorization; raises SingularSystemError on an exactly singular matrix."""
    try:
        return spla.splu(sp.csc_matrix(matrix), permc_spec="MMD_AT_PLUS_A")
    except RuntimeError as exc:
        raise SingularSystemError(str(exc)) from exc


def solve(matrix, rhs, tol: float = DEFAULT_TOL, factor=None, max_iter: int = 10):
    """Solve ``matrix @ x = rhs``.

    With ``factor=None`` the matrix is LU-factorized directly and the result
    polished by iterative refinement. A ``factor`` from a nearby matrix (e.g.
    the previous time step) is used as a preconditioner for the same
    refinement loop instead of refactorizing.

    Returns ``(x, SolveReport)``; a non-converged report is returned, not
    raised, so callers decide whether to reject the step.
    """
    if tol <= 0:
        raise ValueError("tol must be > 0")
    matrix = sp.csr_matrix(matrix)
    rhs = np.asarray(rhs, dtype=float)
    n, m = matrix.shape
    if n != m:
        raise ValueError("matrix must be square")
    if rhs.shape != (n,):
        raise ValueError(f"rhs has shape {rhs.shape}, expected ({n},)")

    rhs_norm = np.linalg.norm(rhs)
    if rhs_norm == 0.0:
        if factor is None:
            factorize(matrix)  # still surface singularity
        return np.zeros(n), SolveReport(True, 0, 0.0)

    lu = factorize(matrix) if factor is None else factor
    x = lu.solve(rhs)
    residual = rhs - matrix @ x
    res_norm = np.linalg.norm(residual)
    iterations = 1
    bound = tol * rhs_norm
    while not res_norm <= bound and iterations < max_iter:
        x = x + lu.solve(residual)
        residual = rhs - matrix @ x
        new_norm = np.linalg.norm(residual)
        iterations += 1
        if not new_norm < res_norm:
            res_norm = new_norm
            break
        res_norm = new_norm
    converged = bool(np.isfinite(res_norm) and res_norm <= bound)
    return x, SolveReport(converged, iterations, float(res_norm))


class ReusedFactorSolver:
    """Solve a sequence of slowly varying systems, refactorizing only when needed.

    The last LU factor preconditions the refinement loop; when it stops
    converging in ``max_reuse_iter`` iterations the current matrix is
    factorized afresh.
    """

    def __init__(self, tol: float = DEFAULT_TOL, max_reuse_iter: int = 6):
        self.tol = tol
        self.max_reuse_iter = max_reuse_iter
        self._factor = None
        self.refactorizations = 0

    def __call__(self, matrix, rhs):
        if self._factor is not None:
            x, report = solve(matrix, rhs, self.tol, factor=self._factor,
                              max_iter=self.max_reuse_iter)
            if report.converged:
                return x, report
        self._factor = factorize(matrix)
        self.refactorizations += 1
        return solve(matrix, rhs, self.tol, factor=self._factor)


def checked_solve(matrix, rhs, tol: float = DEFAULT_TOL, solver: Optional[ReusedFactorSolver] = None):
    """Like :func:`solve` but raises SolverFailure when the residual bound is missed."""
    if solver is None:
        x, report = solve(matrix, rhs, tol)
    else:
        x, report = solver(matrix, rhs)
    if not report.converged:
        raise SolverFailure(f"linear solve did not converge (residual {report.residual_norm:.3e})", report)
    return x


def tridiagonal_matvec(lower, diag, upper, x, cyclic: bool = False) -> np.ndarray:
    """Row i is ``lower[i] x[i-1] + diag[i] x[i] + upper[i] x[i+1]``.

    Indices wrap around when ``cyclic``; otherwise ``lower[0]`` and
    ``upper[-1]`` are ignored.
    """
    below = np.roll(x, 1)
    above = np.roll(x, -1)
    if not cyclic:
        below[0] = 0.0
        above[-1] = 0.0
    return lower * below + diag * x + upper * above


def _banded(lower, diag, upper):
    ab = np.zeros((3, diag.size))
    ab[0, 1:] = upper[:-1]
    ab[1] = diag
    ab[2, :-1] = lower[1:]
    return ab


def solve_tridiagonal(lower, diag, upper, rhs, tol: float = DEFAULT_TOL, cyclic: bool = False,
                      max_iter: int = 5):
    """Tridiagonal (or periodic tridiagonal) solve with the same residual contract as :func:`solve`.

    The periodic corner entries are handled by a Sherman-Morrison correction
    of the banded solve.
    """
    if tol <= 0:
        raise ValueError("tol must be > 0")
    lower, diag, upper, rhs = (np.asarray(a, dtype=float) for a in (lower, diag, upper, rhs))
    n = diag.size
    if cyclic and n < 3:
        raise ValueError("periodic tridiagonal systems need n >= 3")
    if lower.shape != (n,) or upper.shape != (n,) or rhs.shape != (n,):
        raise ValueError("lower, diag, upper and rhs must all have length n")
    rhs_norm = np.linalg.norm(rhs)
    if rhs_norm == 0.0:
        return np.zeros(n), SolveReport(True, 0, 0.0)

    if cyclic:
        gamma = -diag[0]
        d = diag.copy()
        d[0] -= gamma
        d[-1] -= lower[0] * upper[-1] / gamma
        ab = _banded(lower, d, upper)
        u = np.zeros(n)
        u[0], u[-1] = gamma, upper[-1]
        v0, vn = 1.0, lower[0] / gamma

        def inverse(b):
            y, z = solve_banded((1, 1), ab, np.column_stack([b, u]), check_finite=False).T
            return y - (v0 * y[0] + vn * y[-1]) / (1.0 + v0 * z[0] + vn * z[-1]) * z
    else:
        ab = _banded(lower, diag, upper)

        def inverse(b):
            return solve_banded((1, 1), ab, b, check_finite=False)

    try:
        x = inverse(rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError(str(exc)) from exc
    residual = rhs - tridiagonal_matvec(lower, diag, upper, x, cyclic)
    res_norm = np.linalg.norm(residual)
    iterations = 1
    while not res_norm <= tol * rhs_norm and iterations < max_iter:
        x = x + inverse(residual)
        residual = rhs - tridiagonal_matvec(lower, diag, upper, x, cyclic)
        new_norm = np.linalg.norm(residual)
        iterations += 1
        if not new_norm < res_norm:
            res_norm = new_norm
            break
        res_norm = new_norm
    converged = bool(np.isfinite(res_norm) and res_norm <= tol * rhs_norm)
    return x, SolveReport(converged, iterations, float(res_norm))


def checked_tridiagonal(lower, diag, upper, rhs, tol: float = DEFAULT_TOL, cyclic: bool = False):
    x, report = solve_tridiagonal(lower, diag, upper, rhs, tol, cyclic)
    if not report.converged:
        raise SolverFailure(f"linear solve did not converge (residual {report.residual_norm:.3e})", report)
    return x
