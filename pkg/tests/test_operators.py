import numpy as np
import pytest
import scipy.io

import mesh_factory
from hodgekit.complex import SimplicialComplex
from hodgekit.errors import DimensionError, IndefiniteStarError, SizeLimitError
from hodgekit.operators import (
    Cochain,
    StarKind,
    adjoint_sign,
    coboundary,
    codifferential_apply,
    hodge_star,
    inner_product,
    laplacian,
    laplacian_operator,
    laplacian_strong_apply,
    norm,
    star_norm,
)


def _unit_right_triangle() -> SimplicialComplex:
    return SimplicialComplex.from_top_simplices([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], [[0, 1, 2]])


def test_coboundary_of_a_triangle() -> None:
    c = mesh_factory.single_triangle()

    d0 = coboundary(c, 0).toarray()
    d1 = coboundary(c, 1).toarray()

    assert d0.tolist() == [[-1, 1, 0], [-1, 0, 1], [0, -1, 1]]
    assert d1.tolist() == [[1, -1, 1]]
    assert not (d1 @ d0).any()


def test_coboundary_squares_to_zero_in_three_dimensions(annulus) -> None:
    c = mesh_factory.kuhn_cube()[0]
    for complex_ in (c, annulus):
        for p in range(complex_.dim - 1):
            product = coboundary(complex_, p + 1).matrix @ coboundary(complex_, p).matrix
            assert product.count_nonzero() == 0


def test_coboundary_dimension_check() -> None:
    with pytest.raises(DimensionError):
        coboundary(mesh_factory.single_triangle(), 2)


def test_whitney_vertex_mass_on_unit_right_triangle() -> None:
    c = _unit_right_triangle()
    mass = hodge_star(c, 0, "whitney").toarray()

    expected = np.array([[2.0, 1.0, 1.0], [1.0, 2.0, 1.0], [1.0, 1.0, 2.0]]) / 24.0
    assert np.allclose(mass, expected, atol=1e-15)

    one = Cochain(0, np.ones(3))
    assert inner_product(c, "whitney", one, one) == pytest.approx(0.5)
    assert norm(c, "whitney", one) == pytest.approx(np.sqrt(0.5))


def test_whitney_top_mass_is_inverse_volume() -> None:
    c = _unit_right_triangle()

    assert hodge_star(c, 2, "whitney").toarray() == pytest.approx(np.array([[2.0]]))


def test_whitney_masses_are_symmetric_positive_definite(torus) -> None:
    for p in range(3):
        mass = hodge_star(torus.complex, p, "whitney").matrix
        assert abs(mass - mass.T).max() < 1e-14
        assert np.linalg.eigvalsh(mass.toarray()).min() > 0.0


def test_dec_star_on_a_circle_is_identity() -> None:
    c = mesh_factory.triangle_boundary()

    assert np.allclose(hodge_star(c, 0, "dec").toarray(), np.eye(3))
    assert np.allclose(hodge_star(c, 1, "dec").toarray(), np.eye(3))


def test_dec_star_is_diagonal_and_positive_on_well_centered_meshes(torus) -> None:
    for p in range(3):
        star = hodge_star(torus.complex, p, "dec")
        assert star.nnz == torus.complex.size(p)
        assert (star.diagonal() > 0).all()
        assert star.warnings == ()


def test_dec_vertex_star_sums_to_area(torus) -> None:
    c = torus.complex
    area = c.volumes(2).sum()

    assert hodge_star(c, 0, "dec").diagonal().sum() == pytest.approx(area, rel=1e-12)


def test_dec_star_on_right_triangles_is_rejected() -> None:
    c = mesh_factory.square_grid(4)

    with pytest.raises(IndefiniteStarError):
        hodge_star(c, 1, "dec")


def test_allow_indefinite_keeps_the_star_with_a_warning(caplog) -> None:
    c = mesh_factory.square_grid(4)
    star = hodge_star(c, 1, StarKind("dec", allow_indefinite=True))

    assert star.metadata["nonpositive"] == 16
    assert len(star.warnings) == 1
    assert "nonpositive" in caplog.text


def test_star_kind_validation() -> None:
    with pytest.raises(ValueError):
        StarKind("voronoi")
    with pytest.raises(ValueError):
        StarKind("whitney", allow_indefinite=True)
    assert str(StarKind.coerce("DEC")) == "dec"


def test_adjoint_sign() -> None:
    assert [adjoint_sign(p) for p in range(4)] == [-1.0, 1.0, -1.0, 1.0]


@pytest.mark.parametrize("kind", ["whitney", "dec"])
@pytest.mark.parametrize("mesh", ["torus", "annulus"])
def test_codifferential_is_adjoint_of_coboundary(request, rng, mesh, kind) -> None:
    c = request.getfixturevalue(mesh)
    c = getattr(c, "complex", c)
    for p in range(c.dim):
        a = rng.standard_normal(c.size(p))
        b = rng.standard_normal(c.size(p + 1))
        lhs = float((coboundary(c, p).matrix @ a) @ (hodge_star(c, p + 1, kind).matrix @ b))
        delta_b = codifferential_apply(c, p + 1, kind, b)
        rhs = float(a @ (hodge_star(c, p, kind).matrix @ delta_b))
        scale = star_norm(c, p, kind, a) * star_norm(c, p + 1, kind, b)
        assert abs(lhs - adjoint_sign(p) * rhs) <= 1e-12 * scale


def test_codifferential_returns_a_cochain() -> None:
    c = mesh_factory.single_triangle()
    out = codifferential_apply(c, 1, "whitney", Cochain(1, [1.0, 0.0, 0.0]))

    assert isinstance(out, Cochain)
    assert out.p == 0
    with pytest.raises(DimensionError):
        codifferential_apply(c, 1, "whitney", Cochain(2, [1.0]))


def test_laplacians_are_symmetric_semidefinite() -> None:
    h = np.sqrt(2.0 / 3.0)
    regular = [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.5, np.sqrt(3.0) / 2.0, 0.0], [0.5, np.sqrt(3.0) / 6.0, h]]
    c = SimplicialComplex.from_top_simplices(regular, [[0, 1, 2, 3]])
    for kind in ("whitney", "dec"):
        for p in range(4):
            lap = laplacian(c, p, kind).toarray()
            assert np.allclose(lap, lap.T, atol=1e-12)
            eigs = np.linalg.eigvalsh(lap)
            assert eigs.min() >= -1e-10 * max(eigs.max(), 1.0)


def test_laplacian_records_the_sign_override(caplog) -> None:
    c = mesh_factory.single_triangle()

    top = laplacian(c, 2, "whitney")
    assert top.metadata["sign_printed"] == -1.0
    assert top.metadata["sign_used"] == 1.0
    assert top.warnings and "odd" in caplog.text

    edge = laplacian(c, 1, "whitney")
    assert edge.metadata["sign_printed"] == 1.0
    assert edge.warnings == ()


def test_vertex_laplacian_kills_constants(torus) -> None:
    lap = laplacian(torus.complex, 0, "dec").matrix

    assert np.abs(lap @ np.ones(torus.complex.size(0))).max() < 1e-12


def test_whitney_laplacian_dense_limit(monkeypatch) -> None:
    from hodgekit.config.settings import settings

    c = mesh_factory.single_tet()
    monkeypatch.setattr(settings, "LAPLACIAN_DENSE_LIMIT", 2)
    with pytest.raises(SizeLimitError):
        laplacian(c, 1, "whitney")


def test_matrix_free_laplacian_matches_assembled(rng) -> None:
    c = mesh_factory.single_tet()
    x = rng.standard_normal(c.size(2))

    assembled = laplacian(c, 2, "whitney").matrix @ x
    applied = laplacian_operator(c, 2, "whitney").matvec(x)
    assert np.allclose(applied, assembled, rtol=1e-8, atol=1e-10)


def test_matrix_market_export(tmp_path) -> None:
    c = mesh_factory.single_tet()
    star = hodge_star(c, 1, "whitney")

    path = star.write_matrix_market(tmp_path / "ops" / "star1.mtx")
    loaded = scipy.io.mmread(str(path))
    assert np.allclose(loaded.toarray(), star.toarray(), rtol=1e-14)


def test_strong_laplacian_divides_by_the_star(torus, rng) -> None:
    c = torus.complex
    x = rng.standard_normal(c.size(1))

    weak = laplacian(c, 1, "dec").matrix @ x
    strong = laplacian_strong_apply(c, 1, "dec", x)
    assert np.allclose(strong * hodge_star(c, 1, "dec").diagonal(), weak, atol=1e-10)
