"""Shared linear solvers for symmetric positive definite grid operators.

Systems have the form ``A v = lap_coeff * (-Laplacian v) + diag * v`` with
``lap_coeff >= 0`` and a strictly positive effective diagonal, so A is SPD.
One-dimensional grids get a dense Cholesky factorization (the periodic
wrap spoils bandedness but N is small); tori use Jacobi-preconditioned
conjugate gradients on the stencil.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg
from scipy.sparse.linalg import LinearOperator, cg

from .errors import ConvergenceError
from .grid import Grid, laplacian_values

_CG_RTOL = 1e-13


def _dense_operator(grid: Grid, lap_coeff: float, diag: np.ndarray) -> np.ndarray:
    n = grid.total_points
    mat = np.diag(np.asarray(diag, dtype=float))
    points = grid.points[0]
    h = grid.spacings[0]
    idx = np.arange(points)
    mat[idx, idx] += lap_coeff * 2.0 / (h * h)
    mat[idx, (idx + 1) % points] -= lap_coeff / (h * h)
    mat[idx, (idx - 1) % points] -= lap_coeff / (h * h)
    assert mat.shape == (n, n)
    return mat


def spd_solver(grid: Grid, lap_coeff: float, diag: np.ndarray):
    """Return a ``solve(b) -> x`` closure for the SPD operator above."""
    diag = np.asarray(diag, dtype=float)
    if grid.ndim == 1:
        cho = scipy.linalg.cho_factor(_dense_operator(grid, lap_coeff, diag))

        def solve(b):
            return scipy.linalg.cho_solve(cho, b)

        return solve

    n = grid.total_points

    def matvec(v):
        return -lap_coeff * laplacian_values(grid, v) + diag * v

    op = LinearOperator((n, n), matvec=matvec, dtype=float)
    stencil_diag = lap_coeff * sum(2.0 / (h * h) for h in grid.spacings) + diag
    precond = LinearOperator(
        (n, n), matvec=lambda v: v / stencil_diag, dtype=float
    )

    def solve(b):
        x, info = cg(op, b, rtol=_CG_RTOL, atol=0.0, maxiter=20 * n, M=precond)
        if info != 0:
            raise ConvergenceError(f"conjugate gradients failed (info={info})")
        return x

    return solve
