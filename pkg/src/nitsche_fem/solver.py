"""Jacobi-preconditioned conjugate gradients for the assembled SPD system."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import kernels
from .assembly import SparseSystem

__all__ = ["SolveReport", "SolverError", "solve_spd", "residual_norm"]

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-10


class SolverError(RuntimeError):
    pass


@dataclass(frozen=True)
class SolveReport:
    solution: np.ndarray
    iterations: int
    relative_residual: float
    method: str = "pcg-jacobi"


def _csr(A):
    A = sp.csr_matrix(A)
    A.sort_indices()
    return (np.ascontiguousarray(A.indptr, dtype=np.int64),
            np.ascontiguousarray(A.indices, dtype=np.int64),
            np.ascontiguousarray(A.data, dtype=float))


def residual_norm(A, x, b) -> float:
    """``||b - A x|| / ||b||`` computed with scipy, independently of the iteration."""
    bn = np.linalg.norm(b)
    r = np.linalg.norm(b - sp.csr_matrix(A) @ x)
    return float(r / bn) if bn > 0 else float(r)


def solve_spd(system, tol: float = DEFAULT_TOL, max_iter: int | None = None,
              rhs=None) -> SolveReport:
    """Solve ``A x = b`` by diagonally preconditioned CG.

    ``system`` is a :class:`SparseSystem` or a sparse/dense matrix, in which
    case ``rhs`` must be given. Raises :class:`SolverError` on a non-positive
    diagonal entry or when ``max_iter`` (default ``10 n``) is exhausted, which
    typically means the penalty is too small for the system to be definite.
    """
    if isinstance(system, SparseSystem):
        A, b = system.matrix, system.rhs
    else:
        A, b = system, rhs
    if not 0 < tol < 1:
        raise ValueError("tol must lie in (0, 1)")
    b = np.asarray(b, dtype=float)
    indptr, indices, data = _csr(A)
    n = len(b)
    if max_iter is None:
        max_iter = 10 * n
    diag = sp.csr_matrix(A).diagonal()
    if np.any(diag <= 0):
        i = int(np.argmin(diag))
        raise SolverError(f"non-positive diagonal entry {diag[i]:g} at row {i}")
    inv_d = 1.0 / diag

    def matvec(v):
        return kernels.csr_matvec(indptr, indices, data, v)

    x = np.zeros(n)
    bnorm = float(np.sqrt(b @ b))
    if bnorm == 0.0:
        return SolveReport(x, 0, 0.0)
    r = b.copy()
    z = inv_d * r
    p = z.copy()
    rz = float(r @ z)
    it = 0
    rel = 1.0
    while it < max_iter:
        Ap = matvec(p)
        pAp = float(p @ Ap)
        if pAp <= 0:
            raise SolverError(
                f"matrix is not positive definite (p.Ap = {pAp:g} at iteration {it}); "
                "increase gamma")
        alpha = rz / pAp
        x += alpha * p
        r -= alpha * Ap
        it += 1
        rel = float(np.sqrt(r @ r)) / bnorm
        if rel <= tol:
            # confirm against the true residual; on drift, restart from it
            r = b - matvec(x)
            if float(np.sqrt(r @ r)) / bnorm <= tol:
                break
            z = inv_d * r
            rz = float(r @ z)
            p = z.copy()
            continue
        z = inv_d * r
        rz_new = float(r @ z)
        p = z + (rz_new / rz) * p
        rz = rz_new

    true_rel = residual_norm(A, x, b)
    if true_rel > tol:
        raise SolverError(
            f"CG did not reach tol={tol:g} within {max_iter} iterations "
            f"(relative residual {true_rel:.3e})")
    logger.debug("pcg converged in %d iterations, residual %.3e", it, true_rel)
    return SolveReport(x, it, true_rel)
