"""Simplicial complexes: skeleta, geometry and topology summaries.

Simplices of every dimension are stored as strictly ascending vertex tuples,
one ``(N_p, p + 1)`` integer array per dimension, rows in lexicographic order.
Orientation enters only through the signs of the coboundary operators built on
top of these tables.
"""

from __future__ import annotations

import itertools
import logging
import math
import threading
from dataclasses import dataclass
from functools import cached_property
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg

from hodgekit.config.settings import settings
from hodgekit.errors import (
    DanglingVertexError,
    DegenerateSimplexError,
    DimensionError,
    MeshParseError,
    NonManifoldError,
)

__all__ = [
    "SimplicialComplex",
    "ComplexSummary",
    "lookup_rows",
    "circumcenters_of",
    "simplex_volume",
    "simplex_volume_checked",
    "circumcenter",
    "summary",
    "kernel_dim_bound",
]

logger = logging.getLogger(__name__)

_DEGENERATE_REL = 1e-12


def lookup_rows(table: np.ndarray, queries: np.ndarray) -> np.ndarray:
    """Return the row index in ``table`` of every row of ``queries`` (-1 when absent)."""
    table = np.asarray(table, dtype=np.int64)
    queries = np.asarray(queries, dtype=np.int64)
    if queries.size == 0:
        return np.zeros(len(queries), dtype=np.int64)
    stacked = np.vstack([table, queries])
    _, inverse = np.unique(stacked, axis=0, return_inverse=True)
    inverse = inverse.reshape(-1)
    slot = np.full(inverse.max() + 1, -1, dtype=np.int64)
    slot[inverse[: len(table)]] = np.arange(len(table), dtype=np.int64)
    return slot[inverse[len(table):]]


def gram_volumes(points: np.ndarray) -> np.ndarray:
    """Unsigned k-volumes of a batch of simplices given as ``(N, k + 1, dim)`` points."""
    points = np.asarray(points, dtype=float)
    k = points.shape[1] - 1
    if k == 0:
        return np.ones(points.shape[0])
    edges = points[:, 1:, :] - points[:, :1, :]
    gram = np.einsum("nid,njd->nij", edges, edges)
    det = np.linalg.det(gram)
    return np.sqrt(np.clip(det, 0.0, None)) / math.factorial(k)


def circumcenters_of(points: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Circumcenters and their barycentric coordinates for ``(N, k + 1, dim)`` simplices.

    Solves ``[[2 P P^T, 1], [1^T, 0]] [b; mu] = [|P_i|^2; 1]`` per simplex with
    coordinates shifted to the first vertex. Raises
    :class:`DegenerateSimplexError` when the system is singular.
    """
    points = np.asarray(points, dtype=float)
    n_simp, k1, dim = points.shape
    if k1 == 1:
        return points[:, 0, :].copy(), np.ones((n_simp, 1))

    shifted = points - points[:, :1, :]
    system = np.zeros((n_simp, k1 + 1, k1 + 1))
    system[:, :k1, :k1] = 2.0 * np.einsum("nid,njd->nij", shifted, shifted)
    system[:, :k1, k1] = 1.0
    system[:, k1, :k1] = 1.0
    rhs = np.zeros((n_simp, k1 + 1))
    rhs[:, :k1] = np.einsum("nid,nid->ni", shifted, shifted)
    rhs[:, k1] = 1.0

    try:
        sol = np.linalg.solve(system, rhs[..., None])[..., 0]
    except np.linalg.LinAlgError as exc:
        raise DegenerateSimplexError(f"circumcenter of a degenerate {k1 - 1}-simplex") from exc

    bary = sol[:, :k1]
    if not np.all(np.isfinite(bary)):
        raise DegenerateSimplexError(f"circumcenter of a degenerate {k1 - 1}-simplex")
    centers = points[:, 0, :] + np.einsum("ni,nid->nd", bary, shifted)
    return centers, bary


@dataclass(frozen=True)
class ComplexSummary:
    """Counts, Euler characteristic and (when affordable) Betti numbers."""

    counts: Tuple[int, ...]
    euler_characteristic: int
    betti: Optional[Tuple[int, ...]]
    boundary_simplex_counts: Tuple[int, ...]
    notices: Tuple[str, ...] = ()

    @property
    def chi_from_betti(self) -> Optional[int]:
        if self.betti is None:
            return None
        return int(sum((-1) ** p * b for p, b in enumerate(self.betti)))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "dim": len(self.counts) - 1,
            "counts": list(self.counts),
            "chi": self.euler_characteristic,
            "betti": list(self.betti) if self.betti is not None else None,
            "chi_from_betti": self.chi_from_betti,
            "boundary_simplex_counts": list(self.boundary_simplex_counts),
            "notices": list(self.notices),
        }


class SimplicialComplex:
    """An immutable, closed simplicial complex embedded in R^d.

    Build instances with :meth:`from_top_simplices`; every lower skeleton is
    generated from the top simplices.
    """

    def __init__(
        self,
        vertices: np.ndarray,
        simplices: Sequence[np.ndarray],
        top_faces: Sequence[np.ndarray],
    ) -> None:
        self._vertices = np.ascontiguousarray(vertices, dtype=float)
        self._simplices = [np.ascontiguousarray(s, dtype=np.int64) for s in simplices]
        self._top_faces = [np.ascontiguousarray(t, dtype=np.int64) for t in top_faces]
        for arr in (self._vertices, *self._simplices, *self._top_faces):
            arr.setflags(write=False)
        self._memo: Dict[Any, Any] = {}
        self._memo_lock = threading.RLock()

    # ------------------------------------------------------------------
    # Construction
    # ------------------------------------------------------------------

    @classmethod
    def from_top_simplices(
        cls,
        vertices: Any,
        top_simplices: Any,
        require_manifold: bool = False,
    ) -> "SimplicialComplex":
        """Close a list of top simplices into a complex.

        Duplicate top simplices are dropped with a warning; vertices referenced by
        no top simplex are kept as isolated 0-simplices, also with a warning.
        """
        verts = np.asarray(vertices, dtype=float)
        if verts.ndim != 2 or verts.shape[0] == 0:
            raise MeshParseError("vertex array must be a non-empty (V, d) array")
        tops = np.asarray(top_simplices, dtype=np.int64)
        if tops.ndim != 2 or tops.shape[0] == 0:
            raise MeshParseError("top simplices must be a non-empty (N, n + 1) array")

        n_verts = verts.shape[0]
        n = tops.shape[1] - 1
        if n < 1:
            raise MeshParseError("top simplices must have at least two vertices")
        if n > verts.shape[1]:
            raise MeshParseError(
                f"{n}-simplices cannot be embedded in R^{verts.shape[1]}"
            )
        bad = (tops < 0) | (tops >= n_verts)
        if bad.any():
            row = int(np.argwhere(bad)[0, 0])
            raise DanglingVertexError(
                f"top simplex {row} references vertex {int(tops[row][bad[row]][0])}, "
                f"but only {n_verts} vertices exist"
            )

        tops = np.sort(tops, axis=1)
        repeated = (np.diff(tops, axis=1) == 0).any(axis=1)
        if repeated.any():
            raise MeshParseError(f"top simplex {int(np.argmax(repeated))} repeats a vertex")

        unique_tops = np.unique(tops, axis=0)
        if len(unique_tops) < len(tops):
            logger.warning("Dropped %d duplicate top simplices", len(tops) - len(unique_tops))
        tops = unique_tops

        used = np.zeros(n_verts, dtype=bool)
        used[tops.ravel()] = True
        if not used.all():
            logger.warning(
                "%d vertices are not used by any top simplex; kept as isolated vertices",
                int((~used).sum()),
            )

        simplices: List[np.ndarray] = [np.arange(n_verts, dtype=np.int64)[:, None]]
        top_faces: List[np.ndarray] = [tops.copy()]
        for p in range(1, n + 1):
            combos = list(itertools.combinations(range(n + 1), p + 1))
            faces = np.concatenate([tops[:, list(cmb)] for cmb in combos], axis=0)
            unique, inverse = np.unique(faces, axis=0, return_inverse=True)
            simplices.append(unique)
            top_faces.append(inverse.reshape(len(combos), len(tops)).T)

        complex_ = cls(verts, simplices, top_faces)
        logger.info(
            "Built %d-complex with counts %s in R^%d",
            n,
            list(complex_.counts),
            complex_.embedding_dim,
        )
        if require_manifold:
            complex_.check_manifold()
        return complex_

    # ------------------------------------------------------------------
    # Basic accessors
    # ------------------------------------------------------------------

    @property
    def vertices(self) -> np.ndarray:
        return self._vertices

    @property
    def embedding_dim(self) -> int:
        return int(self._vertices.shape[1])

    @property
    def dim(self) -> int:
        """Top dimension n."""
        return len(self._simplices) - 1

    @property
    def counts(self) -> Tuple[int, ...]:
        return tuple(len(s) for s in self._simplices)

    def simplices(self, p: int) -> np.ndarray:
        self._check_dim(p)
        return self._simplices[p]

    def top_faces(self, p: int) -> np.ndarray:
        """Global p-face indices of every top simplex, columns in local combination order."""
        self._check_dim(p)
        return self._top_faces[p]

    def size(self, p: int) -> int:
        return 0 if p < 0 or p > self.dim else len(self._simplices[p])

    def index_of(self, p: int, simplex: Sequence[int]) -> int:
        """Index of a simplex (any vertex order) in the canonical table, or -1."""
        self._check_dim(p)
        key = tuple(sorted(int(v) for v in simplex))
        return self._index_maps[p].get(key, -1) if len(key) == p + 1 else -1

    def without_cache(self) -> "SimplicialComplex":
        """Same complex with an empty operator cache (used for cold timing runs)."""
        return SimplicialComplex(self._vertices, self._simplices, self._top_faces)

    def memo(self, key: Any, factory: Callable[[], Any]) -> Any:
        """Per-complex cache for derived operators."""
        with self._memo_lock:
            if key not in self._memo:
                self._memo[key] = factory()
            return self._memo[key]

    def _check_dim(self, p: int) -> None:
        if not 0 <= p <= self.dim:
            raise DimensionError(f"dimension {p} outside 0..{self.dim}")

    @cached_property
    def _index_maps(self) -> List[Dict[Tuple[int, ...], int]]:
        return [{tuple(row): i for i, row in enumerate(s.tolist())} for s in self._simplices]

    def __repr__(self) -> str:
        return f"SimplicialComplex(dim={self.dim}, counts={list(self.counts)})"

    # ------------------------------------------------------------------
    # Incidence
    # ------------------------------------------------------------------

    def facet_indices(self, p: int) -> np.ndarray:
        """``(N_p, p + 1)`` array: column k is the (p-1)-face omitting local vertex k."""
        if not 1 <= p <= self.dim:
            raise DimensionError(f"facets need 1 <= p <= {self.dim}, got {p}")

        def build() -> np.ndarray:
            simp = self._simplices[p]
            table = self._simplices[p - 1]
            cols = [lookup_rows(table, np.delete(simp, k, axis=1)) for k in range(p + 1)]
            out = np.stack(cols, axis=1)
            if (out < 0).any():
                raise MeshParseError(f"complex is not closed at dimension {p - 1}")
            out.setflags(write=False)
            return out

        return self.memo(("facets", p), build)

    def coface_counts(self, p: int) -> np.ndarray:
        """Number of (p+1)-simplices containing each p-simplex."""
        self._check_dim(p)
        if p == self.dim:
            return np.zeros(self.size(p), dtype=np.int64)
        return np.bincount(self.facet_indices(p + 1).ravel(), minlength=self.size(p))

    def boundary_mask(self, p: int) -> np.ndarray:
        """Mask of p-simplices lying in the boundary subcomplex."""
        self._check_dim(p)
        n = self.dim

        def build() -> np.ndarray:
            facet_mask = self.coface_counts(n - 1) == 1
            if p == n:
                return np.zeros(self.size(n), dtype=bool)
            if p == n - 1:
                return facet_mask
            boundary_facets = self._simplices[n - 1][facet_mask]
            mask = np.zeros(self.size(p), dtype=bool)
            for cmb in itertools.combinations(range(n), p + 1):
                idx = lookup_rows(self._simplices[p], boundary_facets[:, list(cmb)])
                mask[idx] = True
            mask.setflags(write=False)
            return mask

        return self.memo(("boundary", p), build)

    def check_manifold(self) -> None:
        """Raise :class:`NonManifoldError` if an (n-1)-simplex has more than two cofaces."""
        n = self.dim
        counts = self.coface_counts(n - 1)
        over = np.flatnonzero(counts > 2)
        if over.size:
            first = tuple(int(v) for v in self._simplices[n - 1][over[0]])
            raise NonManifoldError(
                f"{over.size} {n - 1}-simplices have more than two cofaces (first: {first})"
            )

    # ------------------------------------------------------------------
    # Geometry
    # ------------------------------------------------------------------

    def points(self, p: int) -> np.ndarray:
        """``(N_p, p + 1, d)`` vertex coordinates of every p-simplex."""
        return self._vertices[self.simplices(p)]

    def volumes(self, p: int) -> np.ndarray:
        """Unsigned Gram-determinant volumes of all p-simplices (1 for vertices)."""
        self._check_dim(p)

        def build() -> np.ndarray:
            vols = gram_volumes(self.points(p))
            vols.setflags(write=False)
            return vols

        return self.memo(("volumes", p), build)

    def degenerate_mask(self, p: int) -> np.ndarray:
        """p-simplices whose volume is zero relative to the mesh scale."""
        vols = self.volumes(p)
        if p == 0:
            return np.zeros(len(vols), dtype=bool)
        return vols <= _DEGENERATE_REL * self.length_scale**p

    @cached_property
    def length_scale(self) -> float:
        edges = self.points(1)
        lengths = np.linalg.norm(edges[:, 1] - edges[:, 0], axis=1)
        return float(lengths.mean()) if lengths.size else 1.0

    def require_nondegenerate(self, p: int) -> None:
        bad = np.flatnonzero(self.degenerate_mask(p))
        if bad.size:
            raise DegenerateSimplexError(
                f"{bad.size} degenerate {p}-simplices (first: {tuple(self._simplices[p][bad[0]])})"
            )

    def circumcenters(self, p: int) -> np.ndarray:
        self._check_dim(p)

        def build() -> np.ndarray:
            centers, _ = circumcenters_of(self.points(p))
            centers.setflags(write=False)
            return centers

        return self.memo(("circumcenters", p), build)

    def barycenters(self, p: int) -> np.ndarray:
        return self.points(p).mean(axis=1)

    # ------------------------------------------------------------------
    # Topology
    # ------------------------------------------------------------------

    @property
    def euler_characteristic(self) -> int:
        return int(sum((-1) ** p * c for p, c in enumerate(self.counts)))


# ---------------------------------------------------------------------
# Module-level operations
# ---------------------------------------------------------------------


def simplex_volume_checked(c: SimplicialComplex, p: int, i: int) -> Tuple[float, bool]:
    """Unsigned volume of p-simplex ``i`` and whether it is degenerate.

    Degenerate simplices report a volume of 0.
    """
    vol = float(c.volumes(p)[i])
    if p > 0 and c.degenerate_mask(p)[i]:
        logger.warning("%d-simplex %d is degenerate (volume %.3e)", p, i, vol)
        return 0.0, True
    return vol, False


def simplex_volume(c: SimplicialComplex, p: int, i: int) -> float:
    """Unsigned volume of p-simplex ``i``; degenerate simplices give 0."""
    return simplex_volume_checked(c, p, i)[0]


def circumcenter(c: SimplicialComplex, p: int, i: int) -> np.ndarray:
    if p > 0 and c.degenerate_mask(p)[i]:
        raise DegenerateSimplexError(f"{p}-simplex {i} is degenerate")
    centers, _ = circumcenters_of(c.points(p)[i : i + 1])
    return centers[0]


def _rank(matrix: np.ndarray, rank_tol: float) -> int:
    if matrix.size == 0:
        return 0
    sv = scipy.linalg.svdvals(matrix)
    if sv.size == 0 or sv[0] == 0.0:
        return 0
    return int(np.count_nonzero(sv > rank_tol * sv[0]))


def coboundary_ranks(c: SimplicialComplex, rank_tol: Optional[float] = None) -> List[int]:
    """Dense SVD ranks of d_0 .. d_{n-1}."""
    from hodgekit.operators import coboundary

    tol = settings.RANK_TOL if rank_tol is None else rank_tol
    return [_rank(coboundary(c, p).toarray(), tol) for p in range(c.dim)]


def summary(
    c: SimplicialComplex,
    rank_tol: Optional[float] = None,
    size_limit: Optional[int] = None,
) -> ComplexSummary:
    """Counts, Euler characteristic, Betti numbers and boundary counts."""
    limit = settings.BETTI_SIZE_LIMIT if size_limit is None else size_limit
    counts = c.counts
    notices: List[str] = []

    betti: Optional[Tuple[int, ...]] = None
    if max(counts) > limit:
        msg = f"Betti numbers omitted: {max(counts)} simplices exceed the dense limit {limit}"
        logger.warning(msg)
        notices.append(msg)
    else:
        ranks = coboundary_ranks(c, rank_tol) + [0]
        values = []
        for p, n_p in enumerate(counts):
            kernel = n_p - ranks[p]
            image = ranks[p - 1] if p > 0 else 0
            values.append(int(kernel - image))
        betti = tuple(values)

    boundary = tuple(int(c.boundary_mask(p).sum()) for p in range(c.dim + 1))
    result = ComplexSummary(
        counts=counts,
        euler_characteristic=c.euler_characteristic,
        betti=betti,
        boundary_simplex_counts=boundary,
        notices=tuple(notices),
    )
    if betti is not None and result.chi_from_betti != result.euler_characteristic:
        logger.error(
            "Euler characteristic mismatch: counts give %d, Betti give %d",
            result.euler_characteristic,
            result.chi_from_betti,
        )
    return result


def kernel_dim_bound(c: SimplicialComplex) -> int:
    """Lower bound N_0 - chi on dim ker d_1 for a 3-complex."""
    if c.dim != 3:
        raise DimensionError(f"kernel_dim_bound needs a 3-complex, got dimension {c.dim}")
    return c.size(0) - c.euler_characteristic
