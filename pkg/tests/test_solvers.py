import numpy as np
import pytest
import scipy.sparse as sp

from hodgekit.errors import InconsistentSystemError, SingularSystemError, SolverError
from hodgekit.operators import hodge_star, laplacian
from hodgekit.solvers import (
    b_orthonormalize,
    cg_semidefinite,
    dense_solve,
    least_squares_solve,
    minres_solve,
    null_space_generalized,
    principal_angles,
)

PATH_GRAPH = sp.csr_matrix(np.array([[1.0, -1.0, 0.0], [-1.0, 2.0, -1.0], [0.0, -1.0, 1.0]]))


def test_cg_zero_right_hand_side() -> None:
    x, report = cg_semidefinite(PATH_GRAPH, np.zeros(3))

    assert not x.any()
    assert report.iterations == 0
    assert report.converged


def test_cg_on_a_singular_consistent_system() -> None:
    x, report = cg_semidefinite(PATH_GRAPH, np.array([1.0, 0.0, -1.0]), tol=1e-12)

    assert report.converged
    assert np.allclose(x, [1.0, 0.0, -1.0], atol=1e-12)
    assert abs(x.sum()) < 1e-12


def test_cg_rejects_a_kernel_right_hand_side() -> None:
    with pytest.raises(InconsistentSystemError):
        cg_semidefinite(PATH_GRAPH, np.ones(3))


def test_cg_reports_non_convergence_without_raising(rng) -> None:
    m = rng.standard_normal((60, 60))
    spd = m @ m.T + 1e-3 * np.eye(60)
    _, report = cg_semidefinite(spd, rng.standard_normal(60), tol=1e-14, max_iter=3)

    assert not report.converged
    assert report.iterations == 3


def test_cg_is_deterministic(torus) -> None:
    lap = laplacian(torus.complex, 0, "dec")
    b = np.zeros(torus.complex.size(0))
    b[0], b[-1] = 1.0, -1.0

    first, _ = cg_semidefinite(lap, b, tol=1e-10)
    second, _ = cg_semidefinite(lap, b, tol=1e-10)
    assert np.array_equal(first, second)


def test_cg_jacobi_preconditioner_agrees(torus) -> None:
    lap = laplacian(torus.complex, 0, "whitney")
    b = np.zeros(torus.complex.size(0))
    b[3], b[200] = 2.0, -2.0

    plain, _ = cg_semidefinite(lap, b, tol=1e-11)
    scaled, report = cg_semidefinite(lap, b, tol=1e-11, preconditioner="jacobi")
    assert report.converged
    assert np.allclose(lap.matrix @ scaled, b, atol=1e-9)
    assert np.allclose(lap.matrix @ plain, b, atol=1e-9)


def test_minres_on_a_symmetric_indefinite_system() -> None:
    A = sp.diags([2.0, -1.0, 3.0], format="csr")
    x, report = minres_solve(A, np.array([2.0, 1.0, 3.0]))

    assert report.method == "minres"
    assert report.converged
    assert np.allclose(x, [1.0, -1.0, 1.0])


def test_least_squares_dense_and_iterative_agree() -> None:
    A = np.array([[1.0, 1.0]])
    b = np.array([2.0])

    dense_x, dense_report = least_squares_solve(A, b)
    sparse_x, sparse_report = least_squares_solve(sp.csr_matrix(A), b, dense_limit=0)

    assert dense_report.method == "lstsq"
    assert sparse_report.method == "lsqr"
    assert np.allclose(dense_x, [1.0, 1.0])
    assert np.allclose(sparse_x, [1.0, 1.0], atol=1e-8)


def test_least_squares_overdetermined() -> None:
    A = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
    b = np.array([1.0, 2.0, 0.0])

    x, report = least_squares_solve(A, b)
    expected = np.linalg.lstsq(A, b, rcond=None)[0]
    assert np.allclose(x, expected)
    assert report.relative_residual < 1e-12


def test_null_space_of_the_vertex_laplacian_is_constant(holed_disc) -> None:
    c = holed_disc.complex
    result = null_space_generalized(laplacian(c, 0, "dec"), hodge_star(c, 0, "dec"))

    assert result.dim == 1
    column = result.basis[:, 0]
    assert np.allclose(column, column[0])
    mass = hodge_star(c, 0, "dec").matrix
    assert float(column @ (mass @ column)) == pytest.approx(1.0)


def test_null_space_sparse_path_matches_dense(holed_disc) -> None:
    c = holed_disc.complex
    A, B = laplacian(c, 1, "dec"), hodge_star(c, 1, "dec")

    dense = null_space_generalized(A, B)
    sparse = null_space_generalized(A, B, dense_limit=10)

    assert sparse.method == "shift-invert"
    assert dense.dim == sparse.dim == 4
    assert np.allclose(principal_angles(dense.basis, sparse.basis, B), 0.0, atol=1e-6)


def _path_laplacian(n: int) -> sp.csr_matrix:
    ones = np.ones(n - 1)
    lap = sp.diags([-ones, -ones], [-1, 1], shape=(n, n)).tolil()
    lap.setdiag(-np.asarray(lap.sum(axis=1)).ravel())
    return lap.tocsr()


@pytest.mark.parametrize("dense_limit", [100, 4])
def test_null_space_rejects_an_indefinite_mass_matrix(dense_limit) -> None:
    n = 12
    B = sp.diags([np.full(n - 1, 2.0), np.ones(n), np.full(n - 1, 2.0)], [-1, 0, 1], format="csr")

    with pytest.raises(SolverError, match="positive definite"):
        null_space_generalized(_path_laplacian(n), B, dense_limit=dense_limit)


def test_null_space_sparse_path_accepts_a_banded_mass_matrix() -> None:
    n = 12
    B = sp.diags([np.ones(n - 1), np.full(n, 4.0), np.ones(n - 1)], [-1, 0, 1], format="csr")
    A = _path_laplacian(n)

    dense = null_space_generalized(A, B)
    sparse = null_space_generalized(A, B, dense_limit=4)

    assert sparse.method == "shift-invert"
    assert dense.dim == sparse.dim == 1
    assert np.allclose(principal_angles(dense.basis, sparse.basis, B), 0.0, atol=1e-6)


def test_null_space_of_zero_matrix_is_everything() -> None:
    result = null_space_generalized(np.zeros((3, 3)))

    assert result.dim == 3
    assert np.allclose(result.basis.T @ result.basis, np.eye(3))


def test_dense_solve() -> None:
    assert np.allclose(dense_solve(np.eye(3), np.arange(3.0)), np.arange(3.0))
    assert np.allclose(dense_solve(np.diag([2.0, 4.0]), np.array([2.0, 2.0])), [1.0, 0.5])


def test_dense_solve_random_spd(rng) -> None:
    m = rng.standard_normal((8, 8))
    A = m @ m.T + 8.0 * np.eye(8)
    B = rng.standard_normal((8, 2))

    assert np.allclose(A @ dense_solve(A, B), B)


def test_dense_solve_singular() -> None:
    with pytest.raises(SingularSystemError):
        dense_solve(np.diag([1.0, 0.0]), np.ones(2))
    with pytest.raises(SingularSystemError):
        dense_solve(np.ones((2, 3)), np.ones(2))


def test_b_orthonormalize(rng) -> None:
    B = np.diag([1.0, 2.0, 3.0, 4.0])
    V = b_orthonormalize(rng.standard_normal((4, 2)), B)

    assert np.allclose(V.T @ B @ V, np.eye(2))
    with pytest.raises(SingularSystemError):
        b_orthonormalize(np.ones((4, 2)), B)


def test_principal_angles() -> None:
    U = np.array([[1.0], [0.0]])
    V = np.array([[1.0], [1.0]])

    assert principal_angles(U, V) == pytest.approx([np.pi / 4])
    weighted = principal_angles(U, V, sp.diags([1.0, 4.0], format="csr"))
    assert weighted == pytest.approx([np.arctan(2.0)])
    assert principal_angles(U, np.zeros((2, 0))).size == 0
