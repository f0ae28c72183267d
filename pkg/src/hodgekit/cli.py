"""hodgekit command-line front end.

Subcommands:
  - info                    counts, Euler characteristic, Betti numbers
  - harmonic                harmonic representative of a cocycle (ls, gu-yau, desbrun)
  - basis                   harmonic basis by eigenvectors (eigen-direct, eigen-mixed)
  - project                 projection of a cocycle onto a harmonic basis
  - pair                    harmonic cochains dual to a set of homology cycles
  - compare                 run several methods/stars on one cocycle
  - cocycle-from-dual-path  picket-fence cocycle from a path of top simplices

JSON reports go to ``<out-prefix>.*.json`` (and to stdout for ``info`` and
``compare``); logs go to stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import jsonschema
import numpy as np
from pydantic import BaseModel, Field, ValidationError, model_validator

from hodgekit.complex import SimplicialComplex, summary
from hodgekit.errors import ConvergenceError, DimensionError, HodgeKitError
from hodgekit.harmonic import (
    METHODS,
    HarmonicBasis,
    HarmonicResult,
    HomologyBasis,
    basis_angles,
    cocycle_from_dual_chain,
    compare_methods,
    desbrun,
    gu_yau,
    harmonic_basis_direct,
    harmonic_basis_mixed,
    harmonic_ls,
    pair_homology,
    project_to_harmonics,
    require_cocycle,
)
from hodgekit.io.cochains import read_chain_basis, read_cochain, read_dual_path, write_cochain
from hodgekit.io.meshes import FORMATS, load_complex
from hodgekit.io.reports import to_jsonable, validate_report, write_report
from hodgekit.io.vtk import write_vtk
from hodgekit.operators import Cochain, StarKind, hodge_star
from hodgekit.utils.log_setup import configure_logging

__all__ = ["RunConfig", "build_parser", "main"]

logger = logging.getLogger("hodgekit.cli")

SUBCOMMANDS = ("info", "harmonic", "basis", "project", "pair", "compare", "cocycle-from-dual-path")
HARMONIC_METHODS = ("ls", "gu-yau", "desbrun")
BASIS_METHODS = ("eigen-direct", "eigen-mixed")
STARS = ("whitney", "dec")


# --------------------------------------------------------------------
# Run configuration
# --------------------------------------------------------------------
class RunConfig(BaseModel):
    """Validated command-line request; checked before any mesh is read."""

    subcommand: str = Field(..., description="One of the hodgekit subcommands")
    mesh: Path
    format: Optional[str] = None
    p: Optional[int] = Field(None, ge=0)
    star: List[str] = Field(default_factory=lambda: ["whitney"], min_length=1)
    method: List[str] = Field(default_factory=list)
    cocycle: Optional[Path] = None
    cycles: List[Path] = Field(default_factory=list)
    dual_path: Optional[Path] = None
    closed: bool = False
    tol: Optional[float] = Field(None, gt=0)
    max_iter: Optional[int] = Field(None, gt=0)
    dense_limit: Optional[int] = Field(None, gt=0)
    repeats: int = Field(1, ge=1)
    out_prefix: Optional[Path] = None
    vtk: bool = False
    pin_vertex: Optional[int] = Field(None, ge=0)
    require_manifold: bool = False
    allow_indefinite_star: bool = False
    cross_check: bool = False
    desbrun_solver: str = "minres"

    @model_validator(mode="after")
    def _check_required(self) -> "RunConfig":
        sub = self.subcommand
        if sub not in SUBCOMMANDS:
            raise ValueError(f"unknown subcommand {sub!r}")
        if self.format is not None and self.format not in FORMATS + ("triangle", "tetgen", "json"):
            raise ValueError(f"--format must be one of {FORMATS}")
        for kind in self.star:
            if kind not in STARS:
                raise ValueError(f"--star must be one of {STARS}, got {kind!r}")
        if self.allow_indefinite_star and "dec" not in self.star:
            raise ValueError("--allow-indefinite-star only applies to --star dec")
        if sub != "compare" and len(self.star) != 1:
            raise ValueError(f"{sub} takes a single --star")
        if sub in ("harmonic", "project", "compare") and self.cocycle is None:
            raise ValueError(f"{sub} requires --cocycle")
        if sub in ("basis", "pair") and self.p is None:
            raise ValueError(f"{sub} requires --p")
        if sub == "pair" and not self.cycles:
            raise ValueError("pair requires --cycles")
        if sub == "cocycle-from-dual-path" and self.dual_path is None:
            raise ValueError("cocycle-from-dual-path requires --dual-path")
        if sub != "info" and self.out_prefix is None:
            raise ValueError(f"{sub} requires --out-prefix")
        allowed = {
            "harmonic": HARMONIC_METHODS,
            "basis": BASIS_METHODS,
            "project": BASIS_METHODS,
            "compare": tuple(METHODS),
        }.get(sub, ())
        for name in self.method:
            if name not in allowed:
                raise ValueError(f"{sub}: --method must be one of {allowed}, got {name!r}")
        if sub != "compare" and len(self.method) > 1:
            raise ValueError(f"{sub} takes a single --method")
        if self.desbrun_solver not in ("minres", "superlu"):
            raise ValueError("--desbrun-solver must be 'minres' or 'superlu'")
        return self

    @property
    def star_kinds(self) -> List[StarKind]:
        return [StarKind(kind, self.allow_indefinite_star and kind == "dec") for kind in self.star]

    def output(self, suffix: str) -> Path:
        return Path(f"{self.out_prefix}{suffix}")

    @classmethod
    def from_namespace(cls, args: argparse.Namespace) -> "RunConfig":
        values = {k.replace("-", "_"): v for k, v in vars(args).items() if v is not None}
        values.pop("log_level", None)
        values["subcommand"] = values.pop("cmd")
        for key in ("star", "method"):
            if key in values and isinstance(values[key], str):
                values[key] = [values[key]]
        return cls(**values)


# --------------------------------------------------------------------
# Argument parser
# --------------------------------------------------------------------
def _common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--mesh", type=Path, required=True, help="Mesh file (.off, .json, .node/.ele)")
    parser.add_argument("--format", default=None, help=f"Mesh format override: {', '.join(FORMATS)}")
    parser.add_argument("--require-manifold", action="store_true", help="Reject non-manifold meshes")
    parser.add_argument("--log-level", default=None, help="Override HODGEKIT_LOG_LEVEL")


def _star(parser: argparse.ArgumentParser, many: bool = False) -> None:
    parser.add_argument(
        "--star",
        choices=STARS,
        nargs="+" if many else None,
        default=list(STARS) if many else "whitney",
        help="Hodge star: dec (diagonal, needs a well-centered mesh) or whitney (mass matrix)",
    )
    parser.add_argument(
        "--allow-indefinite-star",
        action="store_true",
        help="Accept nonpositive dec star entries instead of failing",
    )
    parser.add_argument("--dense-limit", type=int, default=None, help="Override HODGEKIT_DENSE_LIMIT")


def _out(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--out-prefix", type=Path, default=None, help="Prefix for every output file")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hodgekit", description="Harmonic cochains on simplicial complexes")
    sub = parser.add_subparsers(dest="cmd", required=True)

    info = sub.add_parser("info", help="Counts, Euler characteristic and Betti numbers")
    _common(info)
    _out(info)

    harmonic = sub.add_parser("harmonic", help="Harmonic representative of a cocycle")
    _common(harmonic)
    _star(harmonic)
    _out(harmonic)
    harmonic.add_argument("--cocycle", type=Path, help="Cocycle file")
    harmonic.add_argument("--method", choices=HARMONIC_METHODS, default="ls")
    harmonic.add_argument("--tol", type=float, default=None, help="Relative residual tolerance")
    harmonic.add_argument("--max-iter", type=int, default=None)
    harmonic.add_argument("--pin-vertex", type=int, default=None, help="Fix alpha at this vertex (p = 1, ls)")
    harmonic.add_argument("--desbrun-solver", choices=("minres", "superlu"), default="minres")
    harmonic.add_argument("--vtk", action="store_true", help="Also write <out-prefix>.vtk (p = 1)")

    basis = sub.add_parser("basis", help="Harmonic basis by eigenvectors")
    _common(basis)
    _star(basis)
    _out(basis)
    basis.add_argument("--p", type=int, help="Cochain degree")
    basis.add_argument("--method", choices=BASIS_METHODS, default="eigen-direct")
    basis.add_argument("--cross-check", action="store_true", help="Also run the other method and report principal angles")
    basis.add_argument("--vtk", action="store_true", help="Write one VTK file per column (p = 1)")

    project = sub.add_parser("project", help="Project a cocycle onto a harmonic basis")
    _common(project)
    _star(project)
    _out(project)
    project.add_argument("--cocycle", type=Path, help="Cocycle file")
    project.add_argument("--method", choices=BASIS_METHODS, default="eigen-direct")
    project.add_argument("--vtk", action="store_true")

    pair = sub.add_parser("pair", help="Harmonic cochains dual to homology cycles")
    _common(pair)
    _star(pair)
    _out(pair)
    pair.add_argument("--p", type=int, help="Cochain degree")
    pair.add_argument("--cycles", type=Path, nargs="+", help="Chain files, one cycle each")

    compare = sub.add_parser("compare", help="Compare methods and stars on one cocycle")
    _common(compare)
    _star(compare, many=True)
    _out(compare)
    compare.add_argument("--cocycle", type=Path, help="Cocycle file")
    compare.add_argument("--method", nargs="+", choices=tuple(METHODS), default=["ls", "desbrun"])
    compare.add_argument("--repeats", type=int, default=1)
    compare.add_argument("--tol", type=float, default=None)
    compare.add_argument("--max-iter", type=int, default=None)
    compare.add_argument("--desbrun-solver", choices=("minres", "superlu"), default="minres")

    dual = sub.add_parser("cocycle-from-dual-path", help="Picket-fence cocycle from a dual path")
    _common(dual)
    _out(dual)
    dual.add_argument("--dual-path", type=Path, help="File of top simplex indices")
    dual.add_argument("--closed", action="store_true", help="The path closes on itself")

    return parser


# --------------------------------------------------------------------
# Helpers
# --------------------------------------------------------------------
def _load(config: RunConfig) -> SimplicialComplex:
    return load_complex(config.mesh, config.format, require_manifold=config.require_manifold)


def _read_cocycle(config: RunConfig, c: SimplicialComplex) -> Cochain:
    kind, omega = read_cochain(config.cocycle)
    if kind != "cochain":
        logger.warning("%s is labelled %r; reading it as a cochain", config.cocycle, kind)
    if not 1 <= omega.p <= c.dim:
        raise DimensionError(f"{config.cocycle}: p = {omega.p} outside 1..{c.dim}")
    omega.check(c)
    return omega


def _emit(payload: Dict[str, Any], schema: str) -> None:
    data = to_jsonable(payload)
    validate_report(data, schema)
    sys.stdout.write(json.dumps(data, indent=2, sort_keys=True) + "\n")


def _operator_notes(c: SimplicialComplex, p: int, star: StarKind) -> List[str]:
    notes: List[str] = []
    for q in (p - 1, p, p + 1):
        if 0 <= q <= c.dim:
            notes.extend(hodge_star(c, q, star).warnings)
    return notes


def _write_result(config: RunConfig, c: SimplicialComplex, result: HarmonicResult) -> Dict[str, Any]:
    outputs = {"h": str(write_cochain(result.h, config.output(".h.cochain")))}
    if result.alpha is not None:
        outputs["alpha"] = str(write_cochain(result.alpha, config.output(".alpha.cochain")))
    if config.vtk:
        if result.h.p == 1 and c.dim in (2, 3):
            outputs["vtk"] = str(write_vtk(c, result.h, config.output(".vtk")))
        else:
            logger.warning("VTK output skipped: needs a 1-cochain on a 2- or 3-complex")

    payload = result.to_dict()
    payload["mesh"] = str(config.mesh)
    payload["outputs"] = outputs
    payload["operator_notes"] = _operator_notes(c, result.h.p, result.star)
    payload["error"] = None
    if not result.report.converged:
        payload["error"] = (
            f"{result.method} did not converge: relative residual "
            f"{result.report.relative_residual:.3e} after {result.report.iterations} iterations"
        )
    write_report(payload, config.output(".diagnostics.json"), "diagnostics")
    if payload["error"]:
        raise ConvergenceError(payload["error"])
    return payload


def _basis(config: RunConfig, c: SimplicialComplex, p: int, method: str) -> HarmonicBasis:
    build = harmonic_basis_mixed if method == "eigen-mixed" else harmonic_basis_direct
    return build(c, p, config.star_kinds[0], dense_limit=config.dense_limit)


def _betti(c: SimplicialComplex, p: int) -> Optional[int]:
    info = c.memo(("summary",), lambda: summary(c))
    return None if info.betti is None else int(info.betti[p])


# --------------------------------------------------------------------
# Subcommands
# --------------------------------------------------------------------
def cmd_info(config: RunConfig) -> int:
    c = _load(config)
    payload = summary(c).to_dict()
    payload["mesh"] = str(config.mesh)
    _emit(payload, "info")
    if config.out_prefix is not None:
        write_report(payload, config.output(".info.json"), "info")
    return 0


def cmd_harmonic(config: RunConfig) -> int:
    c = _load(config)
    omega = _read_cocycle(config, c)
    require_cocycle(c, omega)
    star = config.star_kinds[0]
    method = config.method[0] if config.method else "ls"
    if method == "ls":
        result = harmonic_ls(
            c, omega, star, tol=config.tol, max_iter=config.max_iter, pin_vertex=config.pin_vertex
        )
    elif method == "gu-yau":
        result = gu_yau(c, omega, star, dense_limit=config.dense_limit, tol=config.tol)
    else:
        result = desbrun(
            c, omega, star, solver=config.desbrun_solver, dense_limit=config.dense_limit,
            tol=config.tol, max_iter=config.max_iter,
        )
    _write_result(config, c, result)
    return 0


def cmd_basis(config: RunConfig) -> int:
    c = _load(config)
    p = int(config.p)
    if p > c.dim:
        raise DimensionError(f"--p {p} exceeds the complex dimension {c.dim}")
    method = config.method[0] if config.method else "eigen-direct"
    basis = _basis(config, c, p, method)

    files = [str(write_cochain(basis.column(i), config.output(f".h{i}.cochain"))) for i in range(basis.dim)]
    if config.vtk and p == 1 and c.dim in (2, 3):
        files += [str(write_vtk(c, basis.column(i), config.output(f".h{i}.vtk"))) for i in range(basis.dim)]
    notices = [] if basis.dim else [f"no harmonic {p}-cochains: the {p}-th Betti number is zero"]

    payload: Dict[str, Any] = {
        "mesh": str(config.mesh),
        "method": method,
        "p": p,
        "star": basis.star.kind,
        "dim": basis.dim,
        "betti": _betti(c, p),
        "residual_norms": basis.residual_norms,
        "eigenvalues": basis.eigenvalues,
        "threshold_used": basis.threshold_used,
        "star_orthonormal": basis.is_star_orthonormal(c),
        "files": files,
        "notices": notices,
    }
    if config.cross_check:
        other_method = BASIS_METHODS[1 - BASIS_METHODS.index(method)]
        other = _basis(config, c, p, other_method)
        angles = basis_angles(c, basis, other)
        payload["cross_check"] = {
            "method": other_method,
            "principal_angles": angles,
            "max_angle": float(np.max(angles)) if angles.size else 0.0,
        }
    write_report(payload, config.output(".basis.json"), "basis")
    for notice in notices:
        logger.info(notice)
    return 0


def cmd_project(config: RunConfig) -> int:
    c = _load(config)
    omega = _read_cocycle(config, c)
    require_cocycle(c, omega)
    basis = _basis(config, c, omega.p, config.method[0] if config.method else "eigen-direct")
    _write_result(config, c, project_to_harmonics(c, basis, omega))
    return 0


def cmd_pair(config: RunConfig) -> int:
    c = _load(config)
    p = int(config.p)
    if not 1 <= p <= c.dim:
        raise DimensionError(f"--p {p} outside 1..{c.dim}")
    cycles = HomologyBasis(p, read_chain_basis(config.cycles, p, c.size(p)))
    cycles.check_cycles(c)
    basis = harmonic_basis_direct(c, p, config.star_kinds[0], dense_limit=config.dense_limit)
    dual = pair_homology(c, basis, cycles)

    pairing = cycles.B.T @ dual
    files = [
        str(write_cochain(Cochain(p, dual[:, i]), config.output(f".pair{i}.cochain")))
        for i in range(dual.shape[1])
    ]
    payload = {
        "mesh": str(config.mesh),
        "p": p,
        "star": basis.star.kind,
        "dim": basis.dim,
        "cycles": [str(path) for path in config.cycles],
        "pairing": pairing,
        "max_pairing_error": float(np.max(np.abs(pairing - np.eye(pairing.shape[0])))) if pairing.size else 0.0,
        "files": files,
    }
    write_report(payload, config.output(".pairing.json"), "pairing")
    return 0


def cmd_compare(config: RunConfig) -> int:
    c = _load(config)
    omega = _read_cocycle(config, c)
    report = compare_methods(
        c,
        omega,
        methods=config.method or ["ls", "desbrun"],
        stars=config.star_kinds,
        repeats=config.repeats,
        tol=config.tol,
        max_iter=config.max_iter,
        dense_limit=config.dense_limit,
        desbrun_solver=config.desbrun_solver,
    )
    payload = report.to_dict()
    payload["mesh"] = str(config.mesh)
    write_report(payload, config.output(".compare.json"), "compare")
    _emit(payload, "compare")
    return 0


def cmd_cocycle_from_dual_path(config: RunConfig) -> int:
    c = _load(config)
    path, closed = read_dual_path(config.dual_path)
    omega = cocycle_from_dual_chain(c, path, closed=config.closed or bool(closed))
    target = write_cochain(omega, config.output(".cochain"))
    logger.info("Wrote %d-cocycle with %d nonzero entries to %s", omega.p, int(np.count_nonzero(omega.values)), target)
    return 0


COMMANDS = {
    "info": cmd_info,
    "harmonic": cmd_harmonic,
    "basis": cmd_basis,
    "project": cmd_project,
    "pair": cmd_pair,
    "compare": cmd_compare,
    "cocycle-from-dual-path": cmd_cocycle_from_dual_path,
}


# --------------------------------------------------------------------
# Entry point
# --------------------------------------------------------------------
def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    configure_logging(level=args.log_level)
    try:
        config = RunConfig.from_namespace(args)
    except ValidationError as exc:
        first = exc.errors()[0]
        sys.stderr.write(f"hodgekit {args.cmd}: {first['msg']}\n")
        return 2

    try:
        return COMMANDS[config.subcommand](config)
    except HodgeKitError as exc:
        sys.stderr.write(f"hodgekit {config.subcommand}: {exc}\n")
        logger.debug("%s failed", config.subcommand, exc_info=True)
        return exc.exit_code
    except jsonschema.ValidationError as exc:
        sys.stderr.write(f"hodgekit {config.subcommand}: report failed schema validation: {exc.message}\n")
        return 5


if __name__ == "__main__":
    sys.exit(main())
