"""Linear-algebra kernels.

* :func:`cg_semidefinite` - conjugate gradients for consistent symmetric
  positive semidefinite systems, started from zero.
* :func:`null_space_generalized` - zero eigenvectors of ``A x = lambda B x``.
* :func:`dense_solve` - small dense solves with a condition check.
* :func:`minres_solve`, :func:`least_squares_solve` - kernels for the
  comparison systems.
* :func:`principal_angles` - angles between column spans in a B-inner product.
"""

from __future__ import annotations

import logging
import time
from dataclasses import asdict, dataclass
from typing import Any, Callable, Dict, Optional, Tuple, Union

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from hodgekit.config.settings import settings
from hodgekit.errors import (
    InconsistentSystemError,
    SingularSystemError,
    SizeLimitError,
    SolverError,
)

__all__ = [
    "SolveReport",
    "NullSpaceResult",
    "cg_semidefinite",
    "null_space_generalized",
    "dense_solve",
    "minres_solve",
    "least_squares_solve",
    "principal_angles",
    "b_orthonormalize",
]

logger = logging.getLogger(__name__)

MatrixLike = Union[np.ndarray, sp.spmatrix, spla.LinearOperator, Any]

_EPS = np.finfo(float).eps
_REPLACE_EVERY = 50
# below this relative residual a lost search direction is roundoff, not inconsistency
_STAGNATION_FLOOR = 1e-8


@dataclass(frozen=True)
class SolveReport:
    iterations: int
    relative_residual: float
    converged: bool
    wall_time: float
    method: str = "cg"

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True, eq=False)
class NullSpaceResult:
    """Columns of ``basis`` span the (numerical) null space; B-orthonormal."""

    basis: np.ndarray
    eigenvalues: np.ndarray
    threshold_used: float
    lambda_max: float
    method: str = "dense"

    @property
    def dim(self) -> int:
        return int(self.basis.shape[1])


def _unwrap(A: MatrixLike) -> Any:
    return getattr(A, "matrix", A)


def _as_matvec(A: MatrixLike) -> Callable[[np.ndarray], np.ndarray]:
    A = _unwrap(A)
    if callable(A) and not hasattr(A, "shape"):
        return A
    if isinstance(A, spla.LinearOperator):
        return A.matvec
    return lambda v: A @ v


def _to_dense(A: MatrixLike, size: Optional[int] = None) -> np.ndarray:
    A = _unwrap(A)
    if A is None:
        return np.eye(size)
    if sp.issparse(A):
        return A.toarray()
    if isinstance(A, spla.LinearOperator):
        return A @ np.eye(A.shape[1])
    return np.asarray(A, dtype=float)


# ---------------------------------------------------------------------
# Conjugate gradients
# ---------------------------------------------------------------------


def _jacobi(A: MatrixLike) -> Optional[np.ndarray]:
    A = _unwrap(A)
    if sp.issparse(A):
        diag = A.diagonal()
    elif isinstance(A, np.ndarray):
        diag = np.diag(A)
    else:
        logger.debug("Diagonal preconditioner requested for a matrix-free operator; ignored")
        return None
    inv = np.zeros_like(diag, dtype=float)
    nonzero = diag > 0
    inv[nonzero] = 1.0 / diag[nonzero]
    inv[~nonzero] = 1.0
    return inv


def cg_semidefinite(
    A: MatrixLike,
    b: np.ndarray,
    tol: Optional[float] = None,
    max_iter: Optional[int] = None,
    preconditioner: Optional[str] = None,
) -> Tuple[np.ndarray, SolveReport]:
    """Conjugate gradients for a consistent SPSD system ``A x = b``.

    The initial guess is always zero, so iterates stay in the range of ``A``
    up to roundoff and the returned ``x`` is deterministic. The recursive
    residual is periodically replaced by ``b - A x`` and convergence is only
    declared on the true residual.

    Hitting ``max_iter`` returns ``converged=False``; it does not raise.
    Vanishing search-direction curvature while the residual is still above
    ``tol`` means ``b`` has a component in the kernel of ``A`` and raises
    :class:`InconsistentSystemError`.

    ``preconditioner="jacobi"`` (or the ``solvers.cg_diagonal_preconditioner``
    feature flag) enables diagonal scaling; it is off by default.
    """
    tol = settings.CG_TOL if tol is None else float(tol)
    max_iter = settings.CG_MAX_ITER if max_iter is None else int(max_iter)
    matvec = _as_matvec(A)
    b = np.asarray(b, dtype=float).reshape(-1)
    start = time.perf_counter()

    if preconditioner is None and settings.feature_enabled(
        "solvers", "cg_diagonal_preconditioner", default=False
    ):
        preconditioner = "jacobi"
    inv_diag = _jacobi(A) if preconditioner == "jacobi" else None

    x = np.zeros_like(b)
    b_norm = float(np.linalg.norm(b))
    if b_norm == 0.0:
        return x, SolveReport(0, 0.0, True, time.perf_counter() - start)

    r = b.copy()
    z = r * inv_diag if inv_diag is not None else r
    direction = z.copy()
    rz = float(r @ z)
    lam_est = 0.0
    rel = 1.0
    iterations = 0
    converged = False

    while iterations < max_iter:
        iterations += 1
        a_dir = matvec(direction)
        curvature = float(direction @ a_dir)
        dir_sq = float(direction @ direction)
        if dir_sq > 0.0:
            lam_est = max(lam_est, curvature / dir_sq)
        if curvature <= 10.0 * _EPS * lam_est * dir_sq or curvature <= 0.0:
            if rel <= _STAGNATION_FLOOR:
                logger.debug("CG direction lost curvature at residual %.2e; stopping", rel)
                break
            raise InconsistentSystemError(
                f"zero curvature after {iterations} CG iterations with relative residual "
                f"{rel:.3e}; right-hand side is not in the range of the operator"
            )

        step = rz / curvature
        x += step * direction
        if iterations % _REPLACE_EVERY == 0:
            r = b - matvec(x)
        else:
            r -= step * a_dir
        rel = float(np.linalg.norm(r)) / b_norm

        if rel <= tol:
            r = b - matvec(x)
            rel = float(np.linalg.norm(r)) / b_norm
            if rel <= tol:
                converged = True
                break

        z = r * inv_diag if inv_diag is not None else r
        rz_next = float(r @ z)
        direction = z + (rz_next / rz) * direction
        rz = rz_next

    wall = time.perf_counter() - start
    if converged:
        logger.debug("CG converged in %d iterations (residual %.2e)", iterations, rel)
    else:
        logger.warning(
            "CG stopped after %d iterations with relative residual %.2e (tol %.1e)",
            iterations,
            rel,
            tol,
        )
    return x, SolveReport(iterations, rel, converged, wall)


# ---------------------------------------------------------------------
# MINRES / least squares
# ---------------------------------------------------------------------


def minres_solve(
    A: MatrixLike,
    b: np.ndarray,
    tol: Optional[float] = None,
    max_iter: Optional[int] = None,
) -> Tuple[np.ndarray, SolveReport]:
    """MINRES for symmetric, possibly indefinite and singular, consistent systems."""
    tol = 1e-10 if tol is None else float(tol)
    max_iter = settings.CG_MAX_ITER if max_iter is None else int(max_iter)
    op = _unwrap(A)
    b = np.asarray(b, dtype=float).reshape(-1)
    start = time.perf_counter()
    b_norm = float(np.linalg.norm(b))
    if b_norm == 0.0:
        return np.zeros_like(b), SolveReport(0, 0.0, True, 0.0, method="minres")

    iterations = 0

    def count(_: np.ndarray) -> None:
        nonlocal iterations
        iterations += 1

    try:
        x, info = spla.minres(op, b, rtol=0.01 * tol, maxiter=max_iter, callback=count)
    except TypeError:
        x, info = spla.minres(op, b, tol=0.01 * tol, maxiter=max_iter, callback=count)
    rel = float(np.linalg.norm(b - _as_matvec(op)(x))) / b_norm
    wall = time.perf_counter() - start
    converged = info == 0 and rel <= tol
    if not converged:
        logger.warning("MINRES stopped (info=%d) with relative residual %.2e", info, rel)
    return x, SolveReport(iterations, rel, converged, wall, method="minres")


def least_squares_solve(
    A: MatrixLike,
    b: np.ndarray,
    dense_limit: Optional[int] = None,
    tol: Optional[float] = None,
    max_iter: Optional[int] = None,
) -> Tuple[np.ndarray, SolveReport]:
    """Minimum-norm least-squares solution of a (possibly rectangular) system.

    Dense ``scipy.linalg.lstsq`` when the column count is within
    ``dense_limit``, ``scipy.sparse.linalg.lsqr`` otherwise. The reported
    residual is the normal-equation residual ``|A^T (A x - b)| / |A^T b|``.
    """
    limit = settings.DENSE_LIMIT if dense_limit is None else int(dense_limit)
    tol = 1e-10 if tol is None else float(tol)
    op = _unwrap(A)
    b = np.asarray(b, dtype=float).reshape(-1)
    start = time.perf_counter()
    n_cols = op.shape[1]

    if n_cols <= limit:
        x, _, rank, _ = scipy.linalg.lstsq(_to_dense(op), b, lapack_driver="gelsd")
        iterations, method = 1, "lstsq"
        logger.debug("Dense least squares: %d columns, rank %d", n_cols, rank)
    else:
        result = spla.lsqr(
            op,
            b,
            atol=tol,
            btol=tol,
            iter_lim=settings.CG_MAX_ITER if max_iter is None else max_iter,
        )
        x, iterations, method = result[0], int(result[2]), "lsqr"

    normal_rhs = op.T @ b
    denom = float(np.linalg.norm(normal_rhs))
    rel = 0.0 if denom == 0.0 else float(np.linalg.norm(op.T @ (op @ x - b))) / denom
    wall = time.perf_counter() - start
    return x, SolveReport(iterations, rel, rel <= tol, wall, method=method)


# ---------------------------------------------------------------------
# Null spaces
# ---------------------------------------------------------------------


def b_orthonormalize(V: np.ndarray, B: MatrixLike = None) -> np.ndarray:
    """Return V with columns orthonormal in the B-inner product (Cholesky of V^T B V)."""
    if V.shape[1] == 0:
        return V
    B = _unwrap(B)
    BV = V if B is None else B @ V
    gram = V.T @ np.asarray(BV)
    gram = 0.5 * (gram + gram.T)
    try:
        chol = scipy.linalg.cholesky(gram, lower=True)
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError("columns are linearly dependent in the B-inner product") from exc
    return scipy.linalg.solve_triangular(chol, V.T, lower=True).T


def _check_pd(B: np.ndarray) -> None:
    try:
        scipy.linalg.cholesky(B, lower=True)
    except np.linalg.LinAlgError as exc:
        raise SolverError("B is not positive definite") from exc


def _check_pd_sparse(B: sp.csr_matrix) -> None:
    """Sparse counterpart of ``_check_pd`` through a diagonally pivoted LU.

    With symmetric pivoting the diagonal of U is the D of ``B = L D L^T``.
    """
    diag = B.diagonal()
    if B.nnz == np.count_nonzero(diag):
        if np.any(diag <= 0.0):
            raise SolverError("B is not positive definite")
        return
    try:
        lu = spla.splu(
            B.tocsc(), permc_spec="MMD_AT_PLUS_A", diag_pivot_thresh=0.0,
            options={"SymmetricMode": True},
        )
    except RuntimeError as exc:
        raise SolverError(f"B is not positive definite: {exc}") from exc
    if not np.array_equal(lu.perm_r, lu.perm_c) or np.any(lu.U.diagonal() <= 0.0):
        raise SolverError("B is not positive definite")


def null_space_generalized(
    A: MatrixLike,
    B: MatrixLike = None,
    zero_tol_rel: Optional[float] = None,
    dense_limit: Optional[int] = None,
    indefinite: bool = False,
) -> NullSpaceResult:
    """Eigenvectors of ``A x = lambda B x`` with ``|lambda| <= zero_tol_rel * max|lambda|``.

    ``B=None`` means the identity. Problems up to ``dense_limit`` unknowns use
    the dense symmetric eigensolver; larger semidefinite problems use
    shift-invert Lanczos. Indefinite ``A`` is dense-only.
    """
    zero_tol = settings.ZERO_TOL_REL if zero_tol_rel is None else float(zero_tol_rel)
    limit = settings.DENSE_LIMIT if dense_limit is None else int(dense_limit)
    A = _unwrap(A)
    B = _unwrap(B)
    size = A.shape[0]

    if size == 0:
        return NullSpaceResult(np.zeros((0, 0)), np.zeros(0), 0.0, 0.0)

    if size <= limit:
        dense_a = _to_dense(A)
        dense_a = 0.5 * (dense_a + dense_a.T)
        dense_b = _to_dense(B, size)
        dense_b = 0.5 * (dense_b + dense_b.T)
        _check_pd(dense_b)
        eigvals, eigvecs = scipy.linalg.eigh(dense_a, dense_b)
        lam_max = float(np.max(np.abs(eigvals)))
        threshold = zero_tol * lam_max
        keep = np.abs(eigvals) <= threshold
        logger.debug(
            "Dense generalized eigenproblem (n=%d): %d eigenvalues below %.3e",
            size,
            int(keep.sum()),
            threshold,
        )
        basis = eigvecs[:, keep]
        if lam_max == 0.0:
            basis = b_orthonormalize(np.eye(size), B)
        return NullSpaceResult(basis, eigvals[keep], threshold, lam_max, method="dense")

    if indefinite:
        raise SizeLimitError(
            f"indefinite eigenproblem with {size} unknowns exceeds the dense limit {limit}"
        )
    return _null_space_sparse(A, B, zero_tol)


def _null_space_sparse(A: Any, B: Any, zero_tol: float) -> NullSpaceResult:
    A = sp.csr_matrix(A)
    B = None if B is None else sp.csr_matrix(B)
    if B is not None:
        _check_pd_sparse(B)
    size = A.shape[0]
    lam_max = float(spla.eigsh(A, k=1, M=B, which="LA", return_eigenvectors=False)[0])
    threshold = zero_tol * lam_max
    sigma = -1e-3 * lam_max

    k = min(8, size - 2)
    while True:
        eigvals, eigvecs = spla.eigsh(A, k=k, M=B, sigma=sigma, which="LM")
        order = np.argsort(eigvals)
        eigvals, eigvecs = eigvals[order], eigvecs[:, order]
        keep = np.abs(eigvals) <= threshold
        if not keep.all() or k >= size - 2:
            break
        k = min(2 * k, size - 2)
        logger.debug("All %d shift-invert eigenvalues are zero; retrying with k=%d", k // 2, k)

    basis = b_orthonormalize(eigvecs[:, keep], B)
    return NullSpaceResult(basis, eigvals[keep], threshold, lam_max, method="shift-invert")


# ---------------------------------------------------------------------
# Dense helpers
# ---------------------------------------------------------------------


def dense_solve(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Solve ``A X = B`` for a small square nonsingular ``A``."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.asarray(B, dtype=float)
    if A.shape[0] != A.shape[1]:
        raise SingularSystemError(f"dense_solve needs a square matrix, got {A.shape}")
    if A.shape[0] == 0:
        return np.zeros_like(B)
    cond = float(np.linalg.cond(A))
    logger.debug("dense_solve: n=%d, condition estimate %.3e", A.shape[0], cond)
    if not np.isfinite(cond) or cond * _EPS >= 1.0:
        raise SingularSystemError(f"matrix is singular to working precision (cond {cond:.3e})")
    lu, piv = scipy.linalg.lu_factor(A)
    return scipy.linalg.lu_solve((lu, piv), B)


def _half_factor(B: MatrixLike, size: int) -> Callable[[np.ndarray], np.ndarray]:
    """Return ``V -> R V`` with ``R^T R = B``."""
    B = _unwrap(B)
    if B is None:
        return lambda V: V
    if sp.issparse(B) and B.nnz == np.count_nonzero(B.diagonal()):
        root = np.sqrt(B.diagonal())
        return lambda V: root[:, None] * V
    if size > settings.DENSE_LIMIT:
        raise SizeLimitError(f"principal angles with a dense {size}x{size} inner product")
    upper = scipy.linalg.cholesky(_to_dense(B), lower=False)
    return lambda V: upper @ V


def principal_angles(U: np.ndarray, V: np.ndarray, B: MatrixLike = None) -> np.ndarray:
    """Principal angles (radians, descending) between span(U) and span(V) in the B-inner product."""
    U = np.atleast_2d(np.asarray(U, dtype=float))
    V = np.atleast_2d(np.asarray(V, dtype=float))
    if U.shape[1] == 0 or V.shape[1] == 0:
        return np.zeros(0)
    half = _half_factor(B, U.shape[0])
    return scipy.linalg.subspace_angles(half(U), half(V))
