"""Mesh readers (OFF, Triangle/TetGen .node/.ele, native JSON) and the native JSON writer."""

from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Optional, Tuple, Union

import jsonschema
import numpy as np

from hodgekit.complex import SimplicialComplex
from hodgekit.errors import MeshParseError

from .reports import load_schema
from .text import data_lines, read_text_safe, write_text_atomic

__all__ = ["FORMATS", "detect_format", "load_complex", "save_native_json"]

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

FORMATS = ("off", "triangle_nodes_ele", "tetgen_nodes_ele", "native_json")
_ALIASES = {
    "triangle": "triangle_nodes_ele",
    "tetgen": "tetgen_nodes_ele",
    "json": "native_json",
}


def detect_format(path: PathLike) -> str:
    """Pick a format from the file extension (.off, .json, .node/.ele)."""
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix == ".off":
        return "off"
    if suffix == ".json":
        return "native_json"
    if suffix in (".node", ".ele", ""):
        ele = _sibling(path, ".ele")
        if not ele.exists():
            raise MeshParseError("cannot find the .ele file next to the mesh", path)
        for number, tokens in data_lines(read_text_safe(ele)):
            if len(tokens) < 2:
                raise MeshParseError("malformed .ele header", ele, number)
            return "tetgen_nodes_ele" if int(tokens[1]) >= 4 else "triangle_nodes_ele"
        raise MeshParseError("empty .ele file", ele)
    raise MeshParseError(f"cannot infer mesh format from extension {suffix!r}", path)


def _sibling(path: Path, suffix: str) -> Path:
    return path.with_suffix(suffix) if path.suffix else path.with_name(path.name + suffix)


def _parse_float(token: str, path: Path, line: int) -> float:
    try:
        return float(token)
    except ValueError as exc:
        raise MeshParseError(f"expected a number, got {token!r}", path, line) from exc


def _parse_int(token: str, path: Path, line: int) -> int:
    try:
        return int(token)
    except ValueError as exc:
        raise MeshParseError(f"expected an integer, got {token!r}", path, line) from exc


def _drop_flat_z(vertices: np.ndarray) -> np.ndarray:
    if vertices.shape[1] == 3 and np.all(vertices[:, 2] == 0.0):
        return vertices[:, :2].copy()
    return vertices


# ---------------------------------------------------------------------
# OFF
# ---------------------------------------------------------------------


def _read_off(path: Path) -> Tuple[np.ndarray, np.ndarray]:
    lines = list(data_lines(read_text_safe(path)))
    if not lines or not lines[0][1][0].upper().endswith("OFF"):
        raise MeshParseError("missing OFF header", path, lines[0][0] if lines else 1)

    header_line, header = lines[0]
    cursor = 1
    counts_tokens = header[1:]
    counts_line = header_line
    if not counts_tokens:
        if len(lines) < 2:
            raise MeshParseError("missing counts line", path, header_line)
        counts_line, counts_tokens = lines[1]
        cursor = 2
    if len(counts_tokens) < 2:
        raise MeshParseError("counts line needs vertex and face counts", path, counts_line)
    n_verts = _parse_int(counts_tokens[0], path, counts_line)
    n_faces = _parse_int(counts_tokens[1], path, counts_line)

    if len(lines) < cursor + n_verts + n_faces:
        last = lines[-1][0]
        raise MeshParseError(
            f"expected {n_verts} vertices and {n_faces} faces, file ends early", path, last
        )

    vertices = np.zeros((n_verts, 3))
    for k in range(n_verts):
        number, tokens = lines[cursor + k]
        if len(tokens) < 3:
            raise MeshParseError("vertex line needs three coordinates", path, number)
        vertices[k] = [_parse_float(t, path, number) for t in tokens[:3]]
    cursor += n_verts

    faces = np.zeros((n_faces, 3), dtype=np.int64)
    for k in range(n_faces):
        number, tokens = lines[cursor + k]
        arity = _parse_int(tokens[0], path, number)
        if arity != 3:
            raise MeshParseError(f"only triangular faces are supported, got a {arity}-gon", path, number)
        if len(tokens) < 4:
            raise MeshParseError("face line needs three vertex indices", path, number)
        faces[k] = [_parse_int(t, path, number) for t in tokens[1:4]]
        if faces[k].min() < 0 or faces[k].max() >= n_verts:
            raise MeshParseError(
                f"face references vertex {int(faces[k].max())} outside 0..{n_verts - 1}", path, number
            )
    return _drop_flat_z(vertices), faces


# ---------------------------------------------------------------------
# Triangle / TetGen
# ---------------------------------------------------------------------


def _read_node_ele(path: Path, nodes_per_element: int) -> Tuple[np.ndarray, np.ndarray]:
    node_path, ele_path = _sibling(path, ".node"), _sibling(path, ".ele")
    for required in (node_path, ele_path):
        if not required.exists():
            raise MeshParseError("file not found", required)

    node_lines = list(data_lines(read_text_safe(node_path)))
    if not node_lines:
        raise MeshParseError("empty .node file", node_path, 1)
    header_line, header = node_lines[0]
    n_nodes = _parse_int(header[0], node_path, header_line)
    dim = _parse_int(header[1], node_path, header_line) if len(header) > 1 else 3
    if len(node_lines) - 1 < n_nodes:
        raise MeshParseError(f"expected {n_nodes} nodes", node_path, node_lines[-1][0])

    ids = np.zeros(n_nodes, dtype=np.int64)
    coords = np.zeros((n_nodes, dim))
    for k in range(n_nodes):
        number, tokens = node_lines[1 + k]
        if len(tokens) < dim + 1:
            raise MeshParseError(f"node line needs an index and {dim} coordinates", node_path, number)
        ids[k] = _parse_int(tokens[0], node_path, number)
        coords[k] = [_parse_float(t, node_path, number) for t in tokens[1 : dim + 1]]

    base = int(ids.min()) if n_nodes else 0
    if base not in (0, 1) or not np.array_equal(np.sort(ids), np.arange(base, base + n_nodes)):
        raise MeshParseError("node indices must be contiguous and start at 0 or 1", node_path, header_line)
    order = np.argsort(ids)
    coords = coords[order]

    ele_lines = list(data_lines(read_text_safe(ele_path)))
    if not ele_lines:
        raise MeshParseError("empty .ele file", ele_path, 1)
    ele_header_line, ele_header = ele_lines[0]
    n_elements = _parse_int(ele_header[0], ele_path, ele_header_line)
    per_element = _parse_int(ele_header[1], ele_path, ele_header_line) if len(ele_header) > 1 else nodes_per_element
    if per_element < nodes_per_element:
        raise MeshParseError(
            f"elements have {per_element} nodes, need {nodes_per_element}", ele_path, ele_header_line
        )
    if len(ele_lines) - 1 < n_elements:
        raise MeshParseError(f"expected {n_elements} elements", ele_path, ele_lines[-1][0])

    elements = np.zeros((n_elements, nodes_per_element), dtype=np.int64)
    for k in range(n_elements):
        number, tokens = ele_lines[1 + k]
        if len(tokens) < nodes_per_element + 1:
            raise MeshParseError("element line is too short", ele_path, number)
        row = [_parse_int(t, ele_path, number) - base for t in tokens[1 : nodes_per_element + 1]]
        if min(row) < 0 or max(row) >= n_nodes:
            raise MeshParseError(
                f"element references node {max(row) + base} outside the node table", ele_path, number
            )
        elements[k] = row

    logger.debug("Read %d nodes (base %d) and %d elements from %s", n_nodes, base, n_elements, path)
    return _drop_flat_z(coords), elements


# ---------------------------------------------------------------------
# Native JSON
# ---------------------------------------------------------------------


def _read_native_json(path: Path) -> Tuple[np.ndarray, np.ndarray]:
    try:
        payload = json.loads(read_text_safe(path))
    except json.JSONDecodeError as exc:
        raise MeshParseError(f"invalid JSON: {exc.msg}", path, exc.lineno) from exc
    try:
        jsonschema.validate(instance=payload, schema=load_schema("mesh"))
    except jsonschema.ValidationError as exc:
        raise MeshParseError(f"mesh JSON does not match schema: {exc.message}", path) from exc

    vertices = np.asarray(payload["vertices"], dtype=float)
    if vertices.ndim != 2 or vertices.shape[1] != payload["embedding_dim"]:
        raise MeshParseError("vertex coordinates do not match embedding_dim", path)
    tops = payload["top_simplices"]
    if len({len(t) for t in tops}) != 1:
        raise MeshParseError("all top simplices must have the same number of vertices", path)
    return vertices, np.asarray(tops, dtype=np.int64)


def save_native_json(c: SimplicialComplex, path: PathLike) -> Path:
    """Write vertices and canonical top simplices; reloading reproduces every table."""
    payload = {
        "embedding_dim": c.embedding_dim,
        "vertices": [[float(x) for x in row] for row in c.vertices],
        "top_simplices": c.simplices(c.dim).tolist(),
    }
    return write_text_atomic(path, json.dumps(payload, indent=1) + "\n")


# ---------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------


def load_complex(
    path: PathLike,
    format: Optional[str] = None,
    require_manifold: bool = False,
) -> SimplicialComplex:
    """Read a mesh file and close it into a :class:`SimplicialComplex`."""
    path = Path(path)
    fmt = _ALIASES.get(format, format) if format else detect_format(path)
    if fmt not in FORMATS:
        raise MeshParseError(f"unknown mesh format {format!r}; expected one of {FORMATS}", path)
    if fmt not in ("triangle_nodes_ele", "tetgen_nodes_ele") and not path.exists():
        raise MeshParseError("file not found", path)

    if fmt == "off":
        vertices, tops = _read_off(path)
    elif fmt == "triangle_nodes_ele":
        vertices, tops = _read_node_ele(path, 3)
    elif fmt == "tetgen_nodes_ele":
        vertices, tops = _read_node_ele(path, 4)
    else:
        vertices, tops = _read_native_json(path)

    logger.info("Loaded %s mesh %s: %d vertices, %d top simplices", fmt, path, len(vertices), len(tops))
    try:
        return SimplicialComplex.from_top_simplices(vertices, tops, require_manifold=require_manifold)
    except MeshParseError as exc:
        if exc.path is None:
            raise type(exc)(str(exc), path) from exc
        raise
