"""Structured meshes, cycles and dual paths used across the test suite."""

from __future__ import annotations

import itertools
import math
from collections import deque
from pathlib import Path
from typing import Dict, List, Sequence, Tuple

import numpy as np

from hodgekit.complex import SimplicialComplex

Tri = Tuple[Tuple[int, int], Tuple[int, int], Tuple[int, int]]


# ---------------------------------------------------------------------
# Offset-row lattice shared by the torus and the holed disc
# ---------------------------------------------------------------------


def band_triangles(i: int, j: int) -> Tuple[Tri, Tri]:
    """The two lattice triangles of column ``i`` in the band between rows ``j`` and ``j + 1``.

    Odd rows are shifted half a step to the right.
    """
    if j % 2 == 0:
        first = ((i, j), (i + 1, j), (i, j + 1))
        second = ((i, j + 1), (i + 1, j + 1), (i + 1, j))
    else:
        first = ((i, j), (i + 1, j), (i + 1, j + 1))
        second = ((i, j + 1), (i + 1, j + 1), (i, j))
    return first, second


# ---------------------------------------------------------------------
# Torus
# ---------------------------------------------------------------------


class Torus:
    """Torus of revolution, ``nu`` columns around the axis and ``nv`` rows around the tube."""

    def __init__(self, nu: int = 40, nv: int = 16, R: float = 3.0, r: float = 1.0):
        assert nv % 2 == 0
        self.nu, self.nv = nu, nv
        verts = []
        for j in range(nv):
            phi = 2.0 * math.pi * j / nv
            for i in range(nu):
                theta = 2.0 * math.pi * (i + 0.5 * (j % 2)) / nu
                radius = R + r * math.cos(phi)
                verts.append((radius * math.cos(theta), radius * math.sin(theta), r * math.sin(phi)))
        self.vertices = np.array(verts)
        self.triangles = [
            [self.v(*corner) for corner in tri]
            for j in range(nv)
            for i in range(nu)
            for tri in band_triangles(i, j)
        ]
        self.complex = SimplicialComplex.from_top_simplices(self.vertices, self.triangles)

    def v(self, i: int, j: int) -> int:
        return (j % self.nv) * self.nu + (i % self.nu)

    def _edge_chain(self, steps: Sequence[Tuple[int, int]]) -> np.ndarray:
        c = self.complex
        chain = np.zeros(c.size(1))
        for a, b in steps:
            k = c.index_of(1, (a, b))
            assert k >= 0, (a, b)
            chain[k] += 1.0 if a < b else -1.0
        return chain

    def longitude(self, j0: int = 0) -> np.ndarray:
        """Cycle around the symmetry axis along row ``j0``."""
        return self._edge_chain([(self.v(i, j0), self.v(i + 1, j0)) for i in range(self.nu)])

    def latitude(self, i0: int = 0) -> np.ndarray:
        """Cycle around the tube through column ``i0``."""
        return self._edge_chain([(self.v(i0, j), self.v(i0, j + 1)) for j in range(self.nv)])

    def _top(self, tri: Tri) -> int:
        return self.complex.index_of(2, [self.v(*corner) for corner in tri])

    def band_path(self, j: int = 0) -> List[int]:
        """Closed dual path around the axis inside band ``j``; its fence crosses the latitude once."""
        path = []
        for i in range(self.nu):
            path.extend(self._top(t) for t in band_triangles(i, j))
        return path

    def tube_path(self, i0: int = 0) -> List[int]:
        """Closed dual path around the tube; its fence crosses the longitude once."""
        path = []
        for j in range(self.nv):
            path.extend(self._top(t) for t in band_triangles(i0, j))
        return path


# ---------------------------------------------------------------------
# Planar disc with hexagonal holes
# ---------------------------------------------------------------------

DEFAULT_HOLES = ((3, 2), (8, 4), (4, 6), (8, 8))


class HoledDisc:
    """Equilateral lattice patch; every hole removes one interior vertex and its six triangles.

    Hole centers must sit on even rows, away from the border and from each other.
    """

    def __init__(self, nx: int = 12, ny: int = 11, holes: Sequence[Tuple[int, int]] = DEFAULT_HOLES):
        self.nx, self.ny = nx, ny
        self.holes = [tuple(h) for h in holes]
        removed = set(self.holes)
        kept = [(i, j) for j in range(ny) for i in range(nx) if (i, j) not in removed]
        self._index: Dict[Tuple[int, int], int] = {ij: k for k, ij in enumerate(kept)}
        self.vertices = np.array([(i + 0.5 * (j % 2), j * math.sqrt(3.0) / 2.0) for i, j in kept])
        self.triangles = []
        for j in range(ny - 1):
            for i in range(nx - 1):
                for tri in band_triangles(i, j):
                    if removed.isdisjoint(tri):
                        self.triangles.append([self._index[corner] for corner in tri])
        self.complex = SimplicialComplex.from_top_simplices(self.vertices, self.triangles)

    def v(self, i: int, j: int) -> int:
        return self._index[(i, j)]

    def _top(self, tri: Tri) -> int:
        k = self.complex.index_of(2, [self.v(*corner) for corner in tri])
        assert k >= 0, tri
        return k

    def hole_cycle(self, hole: int) -> np.ndarray:
        """Counterclockwise hexagon around hole ``hole``."""
        ic, jc = self.holes[hole]
        ring = [(ic + 1, jc), (ic, jc + 1), (ic - 1, jc + 1), (ic - 1, jc), (ic - 1, jc - 1), (ic, jc - 1)]
        c = self.complex
        chain = np.zeros(c.size(1))
        for a, b in zip(ring, ring[1:] + ring[:1]):
            va, vb = self.v(*a), self.v(*b)
            chain[c.index_of(1, (va, vb))] += 1.0 if va < vb else -1.0
        return chain

    def left_path(self, hole: int) -> List[int]:
        """Open dual path from the hole to the left border along the hole's band."""
        ic, jc = self.holes[hole]
        path = []
        for i in range(ic - 2, -1, -1):
            up, down = band_triangles(i, jc)
            path.extend([self._top(down), self._top(up)])
        return path

    def right_path(self, hole: int) -> List[int]:
        """Open dual path from the hole to the right border along the hole's band."""
        ic, jc = self.holes[hole]
        path = [self._top(band_triangles(ic, jc)[1])]
        for i in range(ic + 1, self.nx - 1):
            up, down = band_triangles(i, jc)
            path.extend([self._top(up), self._top(down)])
        return path


# ---------------------------------------------------------------------
# Solid annulus: body-centered cubic tetrahedra around a cubic cavity
# ---------------------------------------------------------------------


def solid_annulus(cubes: int = 6, cavity: Tuple[int, int] = (2, 3)) -> SimplicialComplex:
    """Cube of ``cubes^3`` unit cells minus a cavity block, tetrahedralized BCC style.

    Each face shared by two solid cells becomes four tetrahedra (both cell
    centers plus one face edge), so every tetrahedron is well-centered.
    """
    lo, hi = cavity

    def solid(cell: Tuple[int, int, int]) -> bool:
        inside = all(0 <= x < cubes for x in cell)
        return inside and not all(lo <= x <= hi for x in cell)

    points: Dict[Tuple[float, float, float], int] = {}

    def vid(pt: Tuple[float, float, float]) -> int:
        return points.setdefault(pt, len(points))

    tets = []
    for cell in itertools.product(range(cubes), repeat=3):
        if not solid(cell):
            continue
        for axis in range(3):
            other = list(cell)
            other[axis] += 1
            if not solid(tuple(other)):
                continue
            c1 = tuple(x + 0.5 for x in cell)
            c2 = tuple(x + 0.5 for x in other)
            u, w = [a for a in range(3) if a != axis]
            base = list(cell)
            base[axis] += 1
            corners = []
            for du, dw in ((0, 0), (1, 0), (1, 1), (0, 1)):
                pt = list(base)
                pt[u] += du
                pt[w] += dw
                corners.append(tuple(float(x) for x in pt))
            for a, b in zip(corners, corners[1:] + corners[:1]):
                tets.append([vid(c1), vid(c2), vid(a), vid(b)])

    vertices = np.zeros((len(points), 3))
    for pt, k in points.items():
        vertices[k] = pt
    return SimplicialComplex.from_top_simplices(vertices, tets)


def annulus_dual_path(c: SimplicialComplex, cubes: int = 6, cavity: Tuple[int, int] = (2, 3)) -> List[int]:
    """Shortest path of tetrahedra from the cavity wall to the outer wall.

    Boundary triangles are one cell center plus a cube edge; the edge tells
    which wall the triangle lies on.
    """
    lo, hi = cavity
    counts = c.coface_counts(2)
    faces = c.simplices(2)
    verts = c.vertices

    def wall(face: int) -> str:
        corners = [verts[v] for v in faces[face] if np.all(verts[v] == np.round(verts[v]))]
        if all(np.all((lo <= p) & (p <= hi + 1)) for p in corners):
            return "cavity"
        for axis in range(3):
            if all(p[axis] in (0.0, float(cubes)) for p in corners) and corners[0][axis] == corners[-1][axis]:
                return "outer"
        return "other"

    facets = c.facet_indices(3)
    neighbours: Dict[int, List[int]] = {}
    owners: Dict[int, List[int]] = {}
    for top, row in enumerate(facets):
        for f in row:
            owners.setdefault(int(f), []).append(top)
    for pair in owners.values():
        if len(pair) == 2:
            a, b = pair
            neighbours.setdefault(a, []).append(b)
            neighbours.setdefault(b, []).append(a)

    def touches(top: int, which: str) -> bool:
        return any(counts[f] == 1 and wall(int(f)) == which for f in facets[top])

    starts = [t for t in range(c.size(3)) if touches(t, "cavity")]
    previous: Dict[int, int] = {t: -1 for t in starts}
    queue = deque(starts)
    while queue:
        top = queue.popleft()
        if touches(top, "outer"):
            path = [top]
            while previous[path[-1]] >= 0:
                path.append(previous[path[-1]])
            return path[::-1]
        for nxt in neighbours.get(top, []):
            if nxt not in previous:
                previous[nxt] = top
                queue.append(nxt)
    raise AssertionError("cavity and outer wall are not connected")


# ---------------------------------------------------------------------
# Small complexes
# ---------------------------------------------------------------------


def triangle_boundary() -> SimplicialComplex:
    """The three edges of a unit equilateral triangle (a circle)."""
    verts = np.array([[0.0, 0.0], [1.0, 0.0], [0.5, math.sqrt(3.0) / 2.0]])
    return SimplicialComplex.from_top_simplices(verts, [[0, 1], [1, 2], [0, 2]])


def single_triangle() -> SimplicialComplex:
    return SimplicialComplex.from_top_simplices([[0.0, 0.0], [1.0, 0.0], [0.3, 0.8]], [[0, 1, 2]])


def single_tet() -> SimplicialComplex:
    verts = [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]
    return SimplicialComplex.from_top_simplices(verts, [[0, 1, 2, 3]])


def two_disjoint_tets() -> SimplicialComplex:
    verts = [
        [0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0],
        [5.0, 0.0, 0.0], [6.0, 0.0, 0.0], [5.0, 1.0, 0.0], [5.0, 0.0, 1.0],
    ]
    return SimplicialComplex.from_top_simplices(verts, [[0, 1, 2, 3], [4, 5, 6, 7]])


KUHN_ORDER = ("xyz", "yxz", "yzx", "zyx", "zxy", "xzy")


def kuhn_cube() -> Tuple[SimplicialComplex, List[int]]:
    """Unit cube split into six tetrahedra around its main diagonal.

    Returns the complex and the top indices in the order of a closed walk
    around the diagonal.
    """
    corners = list(itertools.product((0, 1), repeat=3))
    index = {corner: k for k, corner in enumerate(corners)}
    axes = {"x": 0, "y": 1, "z": 2}
    tets = []
    for order in KUHN_ORDER:
        pt = [0, 0, 0]
        tet = [index[tuple(pt)]]
        for axis in order:
            pt[axes[axis]] = 1
            tet.append(index[tuple(pt)])
        tets.append(tet)
    c = SimplicialComplex.from_top_simplices(np.array(corners, dtype=float), tets)
    return c, [c.index_of(3, tet) for tet in tets]


def octahedron() -> Tuple[np.ndarray, List[List[int]]]:
    verts = np.array(
        [[1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0], [0, 0, 1], [0, 0, -1]], dtype=float
    )
    faces = [
        [0, 2, 4], [2, 1, 4], [1, 3, 4], [3, 0, 4],
        [2, 0, 5], [1, 2, 5], [3, 1, 5], [0, 3, 5],
    ]
    return verts, faces


def square_grid(n: int = 4, size: float = 1.0) -> SimplicialComplex:
    """Right-triangle split of an ``n x n`` grid on ``[0, size]^2``."""
    step = size / n
    verts = [(i * step, j * step) for j in range(n + 1) for i in range(n + 1)]
    tris = []
    for j in range(n):
        for i in range(n):
            a = j * (n + 1) + i
            b, d = a + 1, a + n + 1
            tris += [[a, b, d + 1], [a, d + 1, d]]
    return SimplicialComplex.from_top_simplices(np.array(verts), tris)


# ---------------------------------------------------------------------
# File writers for CLI tests
# ---------------------------------------------------------------------


def write_off(path: Path, vertices: np.ndarray, faces: Sequence[Sequence[int]]) -> Path:
    verts = np.asarray(vertices, dtype=float)
    if verts.shape[1] == 2:
        verts = np.hstack([verts, np.zeros((len(verts), 1))])
    lines = ["OFF", f"{len(verts)} {len(faces)} 0"]
    lines += [" ".join(repr(float(x)) for x in row) for row in verts]
    lines += ["3 " + " ".join(str(int(v)) for v in face) for face in faces]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def write_complex_off(path: Path, c: SimplicialComplex) -> Path:
    return write_off(path, c.vertices, c.simplices(2).tolist())
