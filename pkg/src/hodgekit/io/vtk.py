"""Legacy ASCII VTK output of 1-cochains as proxy vector fields."""

from __future__ import annotations

import itertools
import logging
from pathlib import Path
from typing import List, Union

import numpy as np

from hodgekit.complex import SimplicialComplex
from hodgekit.errors import DimensionError
from hodgekit.operators import Cochain, barycentric_gradients

from .text import write_text_atomic

__all__ = ["VTK_LINE", "VTK_TRIANGLE", "VTK_TETRA", "whitney_proxy_vectors", "write_vtk"]

logger = logging.getLogger(__name__)

VTK_LINE = 3
VTK_TRIANGLE = 5
VTK_TETRA = 10

_TOP_CELL_TYPES = {2: VTK_TRIANGLE, 3: VTK_TETRA}


def whitney_proxy_vectors(c: SimplicialComplex, h: Union[Cochain, np.ndarray]) -> np.ndarray:
    """Whitney interpolant of a 1-cochain evaluated at each top simplex barycenter.

    For an edge ``[a, b]`` the Whitney form is ``l_a grad l_b - l_b grad l_a``;
    at the barycenter every ``l`` equals ``1 / (n + 1)``.
    """
    values = h.values if isinstance(h, Cochain) else np.asarray(h, dtype=float)
    if isinstance(h, Cochain) and h.p != 1:
        raise DimensionError(f"proxy vectors need a 1-cochain, got p = {h.p}")
    if values.shape != (c.size(1),):
        raise DimensionError(f"1-cochain has {values.shape} entries, complex has {c.size(1)} edges")

    grads = barycentric_gradients(c)
    edge_ids = c.top_faces(1)
    local = list(itertools.combinations(range(c.dim + 1), 2))
    vectors = np.zeros((c.size(c.dim), c.embedding_dim))
    for k, (a, b) in enumerate(local):
        vectors += values[edge_ids[:, k], None] * (grads[:, b, :] - grads[:, a, :])
    return vectors / (c.dim + 1)


def _pad3(rows: np.ndarray) -> np.ndarray:
    out = np.zeros((rows.shape[0], 3))
    out[:, : rows.shape[1]] = rows
    return out


def write_vtk(
    c: SimplicialComplex,
    h: Union[Cochain, np.ndarray],
    path: Union[str, Path],
    title: str = "hodgekit harmonic 1-cochain",
) -> Path:
    """Write an unstructured grid with top cells carrying the proxy vector and edge cells the edge values."""
    p = h.p if isinstance(h, Cochain) else 1
    if p != 1:
        raise DimensionError(f"VTK output supports 1-cochains only, got p = {p}")
    if c.dim not in _TOP_CELL_TYPES:
        raise DimensionError(f"VTK output supports 2- and 3-dimensional complexes, got n = {c.dim}")
    if c.embedding_dim > 3:
        raise DimensionError(f"cannot write a {c.embedding_dim}-dimensional embedding to VTK")

    values = h.values if isinstance(h, Cochain) else np.asarray(h, dtype=float)
    vectors = _pad3(whitney_proxy_vectors(c, values))
    points = _pad3(c.vertices)
    tops = c.simplices(c.dim)
    edges = c.simplices(1)
    n_tops, n_edges = len(tops), len(edges)
    n_cells = n_tops + n_edges

    lines: List[str] = [
        "# vtk DataFile Version 2.0",
        title[:255],
        "ASCII",
        "DATASET UNSTRUCTURED_GRID",
        f"POINTS {len(points)} double",
    ]
    lines += ["%.17g %.17g %.17g" % tuple(row) for row in points]
    lines.append(f"CELLS {n_cells} {n_tops * (c.dim + 2) + n_edges * 3}")
    lines += [f"{c.dim + 1} " + " ".join(str(int(v)) for v in top) for top in tops]
    lines += [f"2 {int(a)} {int(b)}" for a, b in edges]
    lines.append(f"CELL_TYPES {n_cells}")
    lines += [str(_TOP_CELL_TYPES[c.dim])] * n_tops
    lines += [str(VTK_LINE)] * n_edges

    lines.append(f"CELL_DATA {n_cells}")
    lines.append("VECTORS proxy_field double")
    lines += ["%.17g %.17g %.17g" % tuple(row) for row in vectors]
    lines += ["0 0 0"] * n_edges
    lines.append("SCALARS edge_value double 1")
    lines.append("LOOKUP_TABLE default")
    lines += ["0"] * n_tops
    lines += ["%.17g" % v for v in values]

    target = write_text_atomic(path, "\n".join(lines) + "\n")
    logger.info("Wrote VTK grid with %d top cells and %d edge cells to %s", n_tops, n_edges, target)
    return target
