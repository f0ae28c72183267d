"""Coboundaries, Hodge stars, codifferentials and Laplace-deRham operators.

Two Hodge star flavors are supported:

* ``whitney``: the L2 mass matrix of Whitney p-forms, assembled per top
  simplex from barycentric-coordinate integrals
  ``int lambda_a lambda_b = vol (1 + delta_ab) / ((n + 1)(n + 2))``.
* ``dec``: the diagonal primal-dual star ``|*sigma| / |sigma|`` with signed
  circumcentric dual volumes.

All operators are returned as :class:`SparseOperator` and cached on the
complex, so repeated requests share one assembled matrix.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.io
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from hodgekit.complex import SimplicialComplex, circumcenters_of, gram_volumes
from hodgekit.config.settings import settings
from hodgekit.errors import (
    DimensionError,
    IndefiniteStarError,
    SingularSystemError,
    SizeLimitError,
)
from hodgekit.utils.parallel import map_chunks

__all__ = [
    "Cochain",
    "StarKind",
    "SparseOperator",
    "StarSolver",
    "adjoint_sign",
    "barycentric_gradients",
    "coboundary",
    "hodge_star",
    "star_solver",
    "codifferential_apply",
    "laplacian",
    "laplacian_apply",
    "laplacian_operator",
    "laplacian_strong_apply",
    "inner_product",
    "norm",
    "star_inner",
    "star_norm",
]

logger = logging.getLogger(__name__)

WHITNEY = "whitney"
DEC = "dec"


# ---------------------------------------------------------------------
# Value types
# ---------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Cochain:
    """A real p-cochain; one coefficient per canonical p-simplex."""

    p: int
    values: np.ndarray

    def __post_init__(self) -> None:
        vals = np.array(self.values, dtype=float).reshape(-1)
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "p", int(self.p))

    @classmethod
    def zeros(cls, c: SimplicialComplex, p: int) -> "Cochain":
        return cls(p, np.zeros(c.size(p)))

    def __len__(self) -> int:
        return len(self.values)

    def check(self, c: SimplicialComplex, p: Optional[int] = None) -> "Cochain":
        """Raise :class:`DimensionError` unless this cochain fits ``c`` (and dimension ``p``)."""
        if p is not None and self.p != p:
            raise DimensionError(f"expected a {p}-cochain, got a {self.p}-cochain")
        if not 0 <= self.p <= c.dim:
            raise DimensionError(f"{self.p}-cochain on a {c.dim}-complex")
        if len(self.values) != c.size(self.p):
            raise DimensionError(
                f"{self.p}-cochain has {len(self.values)} values, complex has {c.size(self.p)} "
                f"{self.p}-simplices"
            )
        return self


@dataclass(frozen=True)
class StarKind:
    """Which Hodge star to use; ``allow_indefinite`` only applies to ``dec``."""

    kind: str = WHITNEY
    allow_indefinite: bool = False

    def __post_init__(self) -> None:
        kind = str(self.kind).lower()
        if kind not in (WHITNEY, DEC):
            raise ValueError(f"unknown star kind {self.kind!r}; expected 'whitney' or 'dec'")
        if self.allow_indefinite and kind != DEC:
            raise ValueError("allow_indefinite is only meaningful for the dec star")
        object.__setattr__(self, "kind", kind)

    @classmethod
    def coerce(cls, value: Union["StarKind", str]) -> "StarKind":
        return value if isinstance(value, StarKind) else cls(str(value))

    @property
    def is_dec(self) -> bool:
        return self.kind == DEC

    def __str__(self) -> str:
        return self.kind


StarLike = Union[StarKind, str]


@dataclass(frozen=True, eq=False)
class SparseOperator:
    """A labelled CSR matrix with assembly warnings and metadata."""

    matrix: sp.csr_matrix
    label: str = ""
    warnings: Tuple[str, ...] = ()
    metadata: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        mat = sp.csr_matrix(self.matrix, dtype=float)
        mat.sum_duplicates()
        mat.eliminate_zeros()
        object.__setattr__(self, "matrix", mat)

    @property
    def shape(self) -> Tuple[int, int]:
        return self.matrix.shape

    @property
    def rows(self) -> int:
        return self.matrix.shape[0]

    @property
    def cols(self) -> int:
        return self.matrix.shape[1]

    @property
    def nnz(self) -> int:
        return int(self.matrix.nnz)

    @property
    def T(self) -> sp.csr_matrix:
        return self.matrix.T.tocsr()

    def dot(self, x: np.ndarray) -> np.ndarray:
        return self.matrix @ x

    def __matmul__(self, x: Any) -> Any:
        return self.matrix @ x

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()

    def diagonal(self) -> np.ndarray:
        return self.matrix.diagonal()

    def write_matrix_market(self, path: Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        scipy.io.mmwrite(str(path), self.matrix.tocoo(), comment=self.label)
        return path


# ---------------------------------------------------------------------
# Coboundary
# ---------------------------------------------------------------------


def coboundary(c: SimplicialComplex, p: int) -> SparseOperator:
    """d_p: C^p -> C^{p+1}; entry (j, i) is (-1)^k when sigma_i omits position k of tau_j."""
    if not 0 <= p < c.dim:
        raise DimensionError(f"coboundary d_{p} needs 0 <= p < {c.dim}")

    def build() -> SparseOperator:
        facets = c.facet_indices(p + 1)
        n_rows = facets.shape[0]
        rows = np.repeat(np.arange(n_rows), p + 2)
        signs = np.tile([(-1.0) ** k for k in range(p + 2)], n_rows)
        mat = sp.csr_matrix((signs, (rows, facets.ravel())), shape=(n_rows, c.size(p)))
        return SparseOperator(mat, label=f"d_{p}")

    return c.memo(("coboundary", p), build)


def _coboundary_or_empty(c: SimplicialComplex, p: int) -> sp.csr_matrix:
    """d_p, or an empty matrix with the right shape outside 0 <= p < n."""
    if 0 <= p < c.dim:
        return coboundary(c, p).matrix
    return sp.csr_matrix((c.size(p + 1), c.size(p)))


# ---------------------------------------------------------------------
# Geometry helpers
# ---------------------------------------------------------------------


def barycentric_gradients(c: SimplicialComplex) -> np.ndarray:
    """``(N_n, n + 1, d)`` constant gradients of the barycentric coordinates of each top simplex."""

    def build() -> np.ndarray:
        c.require_nondegenerate(c.dim)
        pts = c.points(c.dim)
        edges = pts[:, 1:, :] - pts[:, :1, :]
        gram = np.einsum("nid,njd->nij", edges, edges)
        grads = np.empty_like(pts)
        grads[:, 1:, :] = np.linalg.solve(gram, edges)
        grads[:, 0, :] = -grads[:, 1:, :].sum(axis=1)
        grads.setflags(write=False)
        return grads

    return c.memo(("bary_grads",), build)


def _gram_dets(gram: np.ndarray, rows: Sequence[int], cols: Sequence[int]) -> np.ndarray:
    if len(rows) == 0:
        return np.ones(gram.shape[0])
    return np.linalg.det(gram[:, list(rows)][:, :, list(cols)])


# ---------------------------------------------------------------------
# Hodge stars
# ---------------------------------------------------------------------


def _whitney_mass(c: SimplicialComplex, p: int) -> SparseOperator:
    n = c.dim
    n_tops = c.size(n)
    patterns = list(itertools.combinations(range(n + 1), p + 1))
    pairs = [(a, b) for a in range(len(patterns)) for b in range(len(patterns))]
    face_idx = c.top_faces(p)
    grads = barycentric_gradients(c)
    vols = c.volumes(n)
    scale = float(math.factorial(p) ** 2)
    denom = float((n + 1) * (n + 2))

    def chunk(start: int, stop: int) -> List[np.ndarray]:
        g = grads[start:stop]
        gram = np.einsum("nid,njd->nij", g, g)
        vol = vols[start:stop]
        out = []
        for a, b in pairs:
            sigma, tau = patterns[a], patterns[b]
            acc = np.zeros(stop - start)
            for i, si in enumerate(sigma):
                rest_s = sigma[:i] + sigma[i + 1 :]
                for j, tj in enumerate(tau):
                    rest_t = tau[:j] + tau[j + 1 :]
                    integral = vol * (1.0 + (si == tj)) / denom
                    acc += (-1.0) ** (i + j) * integral * _gram_dets(gram, rest_s, rest_t)
            out.append(scale * acc)
        return out

    chunks = map_chunks(chunk, n_tops)
    data = np.concatenate([np.concatenate([ch[q] for ch in chunks]) for q in range(len(pairs))])
    rows = np.concatenate([face_idx[:, a] for a, _ in pairs])
    cols = np.concatenate([face_idx[:, b] for _, b in pairs])
    size = c.size(p)
    mat = sp.coo_matrix((data, (rows, cols)), shape=(size, size)).tocsr()
    mat = ((mat + mat.T) * 0.5).tocsr()
    return SparseOperator(mat, label=f"star_{p}[whitney]", metadata={"kind": WHITNEY, "p": p})


def _dec_dual_volumes(c: SimplicialComplex, p: int) -> np.ndarray:
    """Signed circumcentric dual volumes of all p-simplices."""
    n = c.dim
    if p == n:
        return np.ones(c.size(n))

    patterns = {cmb: k for k, cmb in enumerate(itertools.combinations(range(n + 1), p + 1))}
    flags = list(itertools.permutations(range(n + 1), n - p))
    face_idx = c.top_faces(p)
    tops = c.simplices(n)
    verts = c.vertices

    def chunk(start: int, stop: int) -> List[np.ndarray]:
        pts = verts[tops[start:stop]]
        centers: Dict[Tuple[int, ...], Tuple[np.ndarray, np.ndarray]] = {}

        def center_of(subset: Tuple[int, ...]) -> Tuple[np.ndarray, np.ndarray]:
            if subset not in centers:
                centers[subset] = circumcenters_of(pts[:, list(subset), :])
            return centers[subset]

        out = []
        for removal in flags:
            current = tuple(range(n + 1))
            chain = [center_of(current)[0]]
            sign = np.ones(stop - start)
            for r in removal:
                bary = center_of(current)[1]
                sign = sign * np.sign(bary[:, current.index(r)])
                current = tuple(v for v in current if v != r)
                chain.append(center_of(current)[0])
            piece = gram_volumes(np.stack(chain, axis=1))
            out.append(sign * piece)
        return out

    chunks = map_chunks(chunk, c.size(n))
    dual = np.zeros(c.size(p))
    for q, removal in enumerate(flags):
        remaining = tuple(v for v in range(n + 1) if v not in removal)
        target = face_idx[:, patterns[remaining]]
        weights = np.concatenate([ch[q] for ch in chunks])
        dual += np.bincount(target, weights=weights, minlength=c.size(p))
    return dual


def _dec_star(c: SimplicialComplex, p: int, allow_indefinite: bool) -> SparseOperator:
    n = c.dim
    c.require_nondegenerate(n)
    if p > 0:
        c.require_nondegenerate(p)
    dual = _dec_dual_volumes(c, p)
    primal = c.volumes(p)
    values = dual / primal

    zero_level = 1e-12 * c.length_scale ** (n - p)
    bad = np.flatnonzero(dual <= zero_level)
    warnings: Tuple[str, ...] = ()
    if bad.size:
        first = tuple(int(v) for v in c.simplices(p)[bad[0]])
        msg = (
            f"dec star_{p} has {bad.size} nonpositive entries "
            f"(first at {p}-simplex {first}, value {values[bad[0]]:.3e})"
        )
        if not allow_indefinite:
            raise IndefiniteStarError(msg + "; the mesh is not well-centered")
        logger.warning("%s; accepted because allow_indefinite is set", msg)
        warnings = (msg,)

    mat = sp.diags(values, format="csr")
    return SparseOperator(
        mat,
        label=f"star_{p}[dec]",
        warnings=warnings,
        metadata={"kind": DEC, "p": p, "nonpositive": int(bad.size)},
    )


def hodge_star(c: SimplicialComplex, p: int, kind: StarLike = WHITNEY) -> SparseOperator:
    """The Hodge star / mass matrix ``star_p`` of the requested flavor."""
    star = StarKind.coerce(kind)
    if not 0 <= p <= c.dim:
        raise DimensionError(f"star_{p} outside 0..{c.dim}")

    def build() -> SparseOperator:
        if star.is_dec:
            return _dec_star(c, p, star.allow_indefinite)
        return _whitney_mass(c, p)

    return c.memo(("star", p, star), build)


class StarSolver:
    """Applies ``star_p^{-1}``: a diagonal divide for dec, a sparse LU for whitney."""

    def __init__(self, star: SparseOperator):
        self.star = star
        self.diagonal: Optional[np.ndarray] = None
        self._lu = None
        mat = star.matrix
        off_diag = mat.nnz - np.count_nonzero(mat.diagonal())
        if off_diag == 0:
            diag = mat.diagonal()
            if np.any(diag == 0.0):
                raise SingularSystemError(f"{star.label} has zero diagonal entries")
            self.diagonal = diag
        else:
            try:
                self._lu = spla.splu(mat.tocsc())
            except RuntimeError as exc:
                raise SingularSystemError(f"{star.label} is singular: {exc}") from exc

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        rhs = np.asarray(rhs, dtype=float)
        if self.diagonal is not None:
            return rhs / (self.diagonal if rhs.ndim == 1 else self.diagonal[:, None])
        return self._lu.solve(rhs)

    def inverse_matrix(self) -> Union[sp.csr_matrix, np.ndarray]:
        """Sparse diagonal inverse for dec, dense inverse for whitney."""
        if self.diagonal is not None:
            return sp.diags(1.0 / self.diagonal, format="csr")
        return self.solve(np.eye(self.star.rows))


def star_solver(c: SimplicialComplex, p: int, kind: StarLike = WHITNEY) -> StarSolver:
    star = StarKind.coerce(kind)
    return c.memo(("star_solver", p, star), lambda: StarSolver(hodge_star(c, p, star)))


# ---------------------------------------------------------------------
# Codifferential
# ---------------------------------------------------------------------


def adjoint_sign(p: int) -> float:
    """(-1)^(1 - p^2): +1 for odd p, -1 for even p."""
    return 1.0 if (1 - p * p) % 2 == 0 else -1.0


def codifferential_apply(
    c: SimplicialComplex,
    p: int,
    kind: StarLike,
    b: Union[Cochain, np.ndarray],
) -> Union[Cochain, np.ndarray]:
    """delta_p b = (-1)^(1-(p-1)^2) star_{p-1}^{-1} d_{p-1}^T star_p b.

    Accepts a :class:`Cochain` (returns a Cochain) or a raw vector / column
    matrix (returns the same).
    """
    if not 1 <= p <= c.dim:
        raise DimensionError(f"codifferential delta_{p} needs 1 <= p <= {c.dim}")
    star = StarKind.coerce(kind)
    values = b.check(c, p).values if isinstance(b, Cochain) else np.asarray(b, dtype=float)
    if values.shape[0] != c.size(p):
        raise DimensionError(f"delta_{p} expects {c.size(p)} values, got {values.shape[0]}")

    weighted = hodge_star(c, p, star).matrix @ values
    pulled = coboundary(c, p - 1).matrix.T @ weighted
    result = adjoint_sign(p - 1) * star_solver(c, p - 1, star).solve(pulled)
    return Cochain(p - 1, result) if isinstance(b, Cochain) else result


# ---------------------------------------------------------------------
# Laplace-deRham operator
# ---------------------------------------------------------------------


def _printed_sign(n: int, p: int) -> float:
    return -1.0 if ((p - 1) * (n - p + 1)) % 2 else 1.0


def laplacian(c: SimplicialComplex, p: int, kind: StarLike = WHITNEY) -> SparseOperator:
    """Assembled weak Laplacian

    Delta_p = d_p^T star_{p+1} d_p + star_p d_{p-1} star_{p-1}^{-1} d_{p-1}^T star_p.

    The second term is always added with sign +1; it is a congruence of
    ``star_{p-1}^{-1}`` and is positive semidefinite only with that sign. When
    the exponent (p-1)(n-p+1) is odd the override is recorded in
    ``metadata["sign_used"]`` and logged. With the whitney star the second term
    is dense, so assembly is refused above ``settings.LAPLACIAN_DENSE_LIMIT``
    unknowns; use :func:`laplacian_operator` instead.
    """
    star = StarKind.coerce(kind)
    n = c.dim
    if not 0 <= p <= n:
        raise DimensionError(f"Laplacian Delta_{p} outside 0..{n}")

    def build() -> SparseOperator:
        size = c.size(p)
        total = sp.csr_matrix((size, size))
        metadata: Dict[str, Any] = {"kind": star.kind, "p": p}
        warnings: List[str] = []

        if p < n:
            d_p = coboundary(c, p).matrix
            total = total + (d_p.T @ hodge_star(c, p + 1, star).matrix @ d_p)

        if p >= 1:
            printed = _printed_sign(n, p)
            metadata["sign_printed"] = printed
            metadata["sign_used"] = 1.0
            if printed < 0:
                msg = (
                    f"Delta_{p} on a {n}-complex: exponent (p-1)(n-p+1) is odd; "
                    "codifferential term added with sign +1 to keep the operator semidefinite"
                )
                warnings.append(msg)
                if settings.feature_enabled("operators", "log_laplacian_sign_override", default=True):
                    logger.warning(msg)
            star_p = hodge_star(c, p, star).matrix
            pulled = (coboundary(c, p - 1).matrix.T @ star_p).tocsr()
            solver = star_solver(c, p - 1, star)
            if solver.diagonal is not None:
                second = pulled.T @ sp.diags(1.0 / solver.diagonal) @ pulled
            else:
                if size > settings.LAPLACIAN_DENSE_LIMIT:
                    raise SizeLimitError(
                        f"whitney Delta_{p} with {size} unknowns exceeds the dense limit "
                        f"{settings.LAPLACIAN_DENSE_LIMIT}; use laplacian_operator"
                    )
                dense = pulled.T @ solver.solve(pulled.toarray())
                second = sp.csr_matrix(np.asarray(dense))
            total = total + second

        total = ((total + total.T) * 0.5).tocsr()
        return SparseOperator(
            total,
            label=f"Delta_{p}[{star.kind}]",
            warnings=tuple(warnings),
            metadata=metadata,
        )

    return c.memo(("laplacian", p, star), build)


def laplacian_apply(
    c: SimplicialComplex,
    p: int,
    kind: StarLike,
    x: np.ndarray,
    inner_tol: Optional[float] = None,
) -> np.ndarray:
    """Delta_p x without assembling the codifferential term.

    ``inner_tol`` switches the star_{p-1} solve from the sparse LU to an inner
    conjugate-gradient solve.
    """
    star = StarKind.coerce(kind)
    n = c.dim
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    if p < n:
        d_p = coboundary(c, p).matrix
        out += d_p.T @ (hodge_star(c, p + 1, star).matrix @ (d_p @ x))
    if p >= 1:
        star_p = hodge_star(c, p, star).matrix
        d_prev = coboundary(c, p - 1).matrix
        pulled = d_prev.T @ (star_p @ x)
        solver = star_solver(c, p - 1, star)
        if inner_tol is None or solver.diagonal is not None:
            solved = solver.solve(pulled)
        else:
            from hodgekit.solvers import cg_semidefinite

            solved, report = cg_semidefinite(
                hodge_star(c, p - 1, star).matrix, pulled, tol=inner_tol
            )
            if not report.converged:
                raise SingularSystemError(
                    f"inner solve with star_{p - 1} did not converge "
                    f"(residual {report.relative_residual:.2e})"
                )
        out += star_p @ (d_prev @ solved)
    return out


def laplacian_operator(
    c: SimplicialComplex,
    p: int,
    kind: StarLike = WHITNEY,
    inner_tol: float = 1e-13,
) -> spla.LinearOperator:
    """Matrix-free Delta_p; the inner star_{p-1} solve runs CG for whitney."""
    size = c.size(p)
    return spla.LinearOperator(
        (size, size),
        matvec=lambda v: laplacian_apply(c, p, kind, np.ravel(v), inner_tol=inner_tol),
        dtype=float,
    )


def laplacian_strong_apply(
    c: SimplicialComplex, p: int, kind: StarLike, x: np.ndarray
) -> np.ndarray:
    """star_p^{-1} Delta_p x."""
    return star_solver(c, p, kind).solve(laplacian_apply(c, p, kind, x))


# ---------------------------------------------------------------------
# Inner products
# ---------------------------------------------------------------------


def star_inner(c: SimplicialComplex, p: int, kind: StarLike, a: np.ndarray, b: np.ndarray) -> float:
    return float(np.dot(a, hodge_star(c, p, kind).matrix @ b))


def star_norm(c: SimplicialComplex, p: int, kind: StarLike, a: np.ndarray) -> float:
    return math.sqrt(max(star_inner(c, p, kind, a, a), 0.0))


def inner_product(c: SimplicialComplex, kind: StarLike, a: Cochain, b: Cochain) -> float:
    """a^T star_p b."""
    if a.p != b.p:
        raise DimensionError(f"inner product of a {a.p}-cochain with a {b.p}-cochain")
    a.check(c)
    b.check(c)
    return star_inner(c, a.p, kind, a.values, b.values)


def norm(c: SimplicialComplex, kind: StarLike, a: Cochain) -> float:
    return math.sqrt(max(inner_product(c, kind, a, a), 0.0))
