import json

import numpy as np
import pytest

import mesh_factory
from hodgekit.cli import RunConfig, build_parser, main
from hodgekit.io.cochains import read_cochain, write_cochain, write_dual_path
from hodgekit.io.reports import validate_report
from hodgekit.operators import Cochain
from hodgekit.utils import log_setup


@pytest.fixture(autouse=True)
def _leave_logging_to_pytest(monkeypatch):
    monkeypatch.setattr(log_setup, "_configured", True)


@pytest.fixture
def torus_off(tmp_path, torus):
    return mesh_factory.write_complex_off(tmp_path / "torus.off", torus.complex)


@pytest.fixture
def torus_fence(tmp_path, torus, torus_off):
    path = write_dual_path(torus.band_path(0), tmp_path / "band.path", closed=True)
    code = main([
        "cocycle-from-dual-path", "--mesh", str(torus_off),
        "--dual-path", str(path), "--out-prefix", str(tmp_path / "fence"),
    ])
    assert code == 0
    return tmp_path / "fence.cochain"


def test_info_prints_a_valid_report(tmp_path, capsys) -> None:
    verts, faces = mesh_factory.octahedron()
    off = mesh_factory.write_off(tmp_path / "octa.off", verts, faces)

    assert main(["info", "--mesh", str(off), "--out-prefix", str(tmp_path / "octa")]) == 0

    payload = json.loads(capsys.readouterr().out)
    assert payload["counts"] == [6, 12, 8]
    assert payload["chi"] == 2
    assert payload["betti"] == [1, 0, 1]
    assert (tmp_path / "octa.info.json").exists()


def test_malformed_mesh_exits_with_parse_code(tmp_path, capsys) -> None:
    off = tmp_path / "broken.off"
    off.write_text("OFF\n3 1 0\n0 0 0\n1 0 0\n", encoding="utf-8")

    assert main(["info", "--mesh", str(off)]) == 2
    assert "broken.off" in capsys.readouterr().err


def test_argument_errors_exit_with_usage_code(tmp_path, torus_off) -> None:
    assert main(["harmonic"]) == 2
    assert main(["harmonic", "--mesh", str(torus_off), "--out-prefix", str(tmp_path / "x")]) == 2
    assert main(["basis", "--mesh", str(torus_off), "--out-prefix", str(tmp_path / "x")]) == 2
    assert main(["harmonic", "--mesh", str(torus_off), "--star", "voronoi"]) == 2


def test_run_config_validation(tmp_path) -> None:
    args = build_parser().parse_args(
        ["compare", "--mesh", "m.off", "--cocycle", "w.cochain", "--out-prefix", str(tmp_path / "c")]
    )
    config = RunConfig.from_namespace(args)

    assert config.method == ["ls", "desbrun"]
    assert [str(kind) for kind in config.star_kinds] == ["whitney", "dec"]
    assert config.output(".compare.json") == tmp_path / "c.compare.json"
    with pytest.raises(ValueError):
        RunConfig(subcommand="basis", mesh="m.off", out_prefix="x")
    with pytest.raises(ValueError):
        RunConfig(subcommand="info", mesh="m.off", star=["whitney"], allow_indefinite_star=True)


def test_fence_from_dual_path(torus, torus_fence) -> None:
    kind, omega = read_cochain(torus_fence)

    assert kind == "cochain"
    assert omega.p == 1
    assert np.count_nonzero(omega.values) == 2 * torus.nu


@pytest.mark.parametrize("star", ["whitney", "dec"])
def test_harmonic_writes_outputs_and_diagnostics(tmp_path, torus, torus_off, torus_fence, star) -> None:
    prefix = tmp_path / f"h-{star}"
    code = main([
        "harmonic", "--mesh", str(torus_off), "--cocycle", str(torus_fence),
        "--star", star, "--out-prefix", str(prefix), "--vtk",
    ])
    assert code == 0

    report = json.loads((tmp_path / f"h-{star}.diagnostics.json").read_text(encoding="utf-8"))
    validate_report(report, "diagnostics")
    assert report["error"] is None
    assert report["solve"]["converged"]
    assert report["diagnostics"]["d_h_norm"] <= 1e-10
    assert set(report["outputs"]) == {"h", "alpha", "vtk"}
    assert (tmp_path / f"h-{star}.vtk").exists()

    _, h = read_cochain(tmp_path / f"h-{star}.h.cochain")
    assert abs(float(torus.latitude() @ h.values)) == pytest.approx(1.0, abs=1e-9)


def test_harmonic_with_desbrun(tmp_path, torus_off, torus_fence) -> None:
    code = main([
        "harmonic", "--mesh", str(torus_off), "--cocycle", str(torus_fence),
        "--method", "desbrun", "--star", "dec", "--out-prefix", str(tmp_path / "d"),
    ])

    assert code == 0
    report = json.loads((tmp_path / "d.diagnostics.json").read_text(encoding="utf-8"))
    assert report["method"] == "desbrun"
    assert "alpha" in report["outputs"]


def test_harmonic_rejects_a_non_closed_cochain(tmp_path, torus, torus_off, capsys) -> None:
    values = np.zeros(torus.complex.size(1))
    values[0] = 1.0
    cochain = write_cochain(Cochain(1, values), tmp_path / "bump.cochain")

    code = main([
        "harmonic", "--mesh", str(torus_off), "--cocycle", str(cochain), "--out-prefix", str(tmp_path / "b"),
    ])
    assert code == 3
    assert "hodgekit harmonic" in capsys.readouterr().err
    assert not (tmp_path / "b.h.cochain").exists()


def test_harmonic_of_zero_is_zero(tmp_path, torus, torus_off) -> None:
    cochain = write_cochain(Cochain(1, np.zeros(torus.complex.size(1))), tmp_path / "zero.cochain", sparse=True)

    code = main([
        "harmonic", "--mesh", str(torus_off), "--cocycle", str(cochain), "--out-prefix", str(tmp_path / "z"),
    ])
    assert code == 0
    _, h = read_cochain(tmp_path / "z.h.cochain")
    assert not h.values.any()


def test_project_matches_least_squares(tmp_path, torus_off, torus_fence) -> None:
    common = ["--mesh", str(torus_off), "--cocycle", str(torus_fence), "--star", "dec"]
    assert main(["harmonic", *common, "--out-prefix", str(tmp_path / "ls")]) == 0
    assert main(["project", *common, "--out-prefix", str(tmp_path / "pr")]) == 0

    _, ls = read_cochain(tmp_path / "ls.h.cochain")
    _, projected = read_cochain(tmp_path / "pr.h.cochain")
    report = json.loads((tmp_path / "pr.diagnostics.json").read_text(encoding="utf-8"))
    assert report["method"] == "projection"
    assert np.allclose(projected.values, ls.values, atol=1e-7)


def test_basis_on_the_holed_disc(tmp_path, holed_disc) -> None:
    off = mesh_factory.write_complex_off(tmp_path / "disc.off", holed_disc.complex)
    prefix = tmp_path / "disc"

    code = main([
        "basis", "--mesh", str(off), "--p", "1", "--star", "dec",
        "--cross-check", "--out-prefix", str(prefix),
    ])
    assert code == 0

    report = json.loads((tmp_path / "disc.basis.json").read_text(encoding="utf-8"))
    assert report["dim"] == report["betti"] == 4
    assert report["star_orthonormal"]
    assert report["cross_check"]["max_angle"] <= 1e-8
    for i in range(4):
        assert (tmp_path / f"disc.h{i}.cochain").exists()


def test_basis_on_a_disc_without_holes(tmp_path, plain_disc) -> None:
    off = mesh_factory.write_complex_off(tmp_path / "plain.off", plain_disc.complex)

    assert main(["basis", "--mesh", str(off), "--p", "1", "--out-prefix", str(tmp_path / "plain")]) == 0

    report = json.loads((tmp_path / "plain.basis.json").read_text(encoding="utf-8"))
    assert report["dim"] == 0
    assert report["files"] == []
    assert report["notices"]
    assert not list(tmp_path.glob("plain.h*.cochain"))


def test_basis_rejects_a_degree_above_the_dimension(tmp_path, plain_disc) -> None:
    off = mesh_factory.write_complex_off(tmp_path / "plain.off", plain_disc.complex)

    assert main(["basis", "--mesh", str(off), "--p", "3", "--out-prefix", str(tmp_path / "x")]) == 3


def test_pair_with_hole_cycles(tmp_path, holed_disc) -> None:
    off = mesh_factory.write_complex_off(tmp_path / "disc.off", holed_disc.complex)
    cycles = [
        str(write_cochain(Cochain(1, holed_disc.hole_cycle(k)), tmp_path / f"hole{k}.chain", kind="chain"))
        for k in range(4)
    ]

    code = main([
        "pair", "--mesh", str(off), "--p", "1", "--star", "dec",
        "--cycles", *cycles, "--out-prefix", str(tmp_path / "pair"),
    ])
    assert code == 0

    report = json.loads((tmp_path / "pair.pairing.json").read_text(encoding="utf-8"))
    assert report["max_pairing_error"] <= 1e-8
    assert len(report["files"]) == 4
    _, first = read_cochain(tmp_path / "pair.pair0.cochain")
    assert float(holed_disc.hole_cycle(0) @ first.values) == pytest.approx(1.0, abs=1e-8)


def test_pair_with_too_few_cycles_fails(tmp_path, holed_disc) -> None:
    off = mesh_factory.write_complex_off(tmp_path / "disc.off", holed_disc.complex)
    cycle = write_cochain(Cochain(1, holed_disc.hole_cycle(0)), tmp_path / "hole0.chain", kind="chain")

    code = main([
        "pair", "--mesh", str(off), "--p", "1", "--star", "dec",
        "--cycles", str(cycle), "--out-prefix", str(tmp_path / "pair"),
    ])
    assert code == 4


def test_compare_single_method(tmp_path, torus_off, torus_fence, capsys) -> None:
    code = main([
        "compare", "--mesh", str(torus_off), "--cocycle", str(torus_fence),
        "--method", "ls", "--star", "dec", "--out-prefix", str(tmp_path / "cmp"),
    ])
    assert code == 0

    printed = json.loads(capsys.readouterr().out)
    assert len(printed["rows"]) == 1
    assert printed["pairwise"] == []
    saved = json.loads((tmp_path / "cmp.compare.json").read_text(encoding="utf-8"))
    assert saved["rows"][0]["method"] == "ls"
