"""Harmonic cochains.

The main entry point is :func:`harmonic_ls`, which finds the harmonic
representative ``h = omega + d alpha`` of a cocycle's class by solving the
weighted least-squares normal equation

    d^T star_p d alpha = -d^T star_p omega

with unpreconditioned conjugate gradients. Alongside it live two
eigenvector methods for whole bases, projection onto a basis, pairing a basis
with homology cycles, picket-fence cocycles dual to paths of top simplices,
and the Gu-Yau and Desbrun et al. systems used for comparison.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from hodgekit.complex import SimplicialComplex, summary
from hodgekit.config.settings import settings
from hodgekit.errors import (
    BettiMismatchError,
    CochainNotClosedError,
    DimensionError,
    DualPathError,
    HarmonicBasisError,
    HodgeKitError,
    MixedSystemError,
    NotACycleError,
    SingularPairingError,
    SingularSystemError,
    SizeLimitError,
)
from hodgekit.operators import (
    Cochain,
    StarKind,
    StarLike,
    adjoint_sign,
    coboundary,
    codifferential_apply,
    hodge_star,
    laplacian,
    laplacian_apply,
    star_norm,
    star_solver,
)
from hodgekit.solvers import (
    SolveReport,
    b_orthonormalize,
    cg_semidefinite,
    dense_solve,
    least_squares_solve,
    minres_solve,
    null_space_generalized,
    principal_angles,
)

__all__ = [
    "CocycleCheck",
    "HarmonicBasis",
    "HomologyBasis",
    "HarmonicResult",
    "ComparisonReport",
    "METHODS",
    "is_cocycle",
    "require_cocycle",
    "cocycle_from_dual_chain",
    "harmonic_ls",
    "harmonic_basis_direct",
    "harmonic_basis_mixed",
    "project_to_harmonics",
    "pair_homology",
    "gu_yau",
    "desbrun",
    "compare_methods",
    "harmonic_residual",
    "basis_angles",
]

logger = logging.getLogger(__name__)

_SIGMA_REL_TOL = 1e-10
_ORTHONORMAL_TOL = 1e-10
_SPOT_CHECKS = 3


# ---------------------------------------------------------------------
# Result types
# ---------------------------------------------------------------------


@dataclass(frozen=True)
class CocycleCheck:
    closed: bool
    residual: float
    tol: float


@dataclass(frozen=True, eq=False)
class HarmonicBasis:
    """Columns of ``H`` are harmonic p-cochains computed with ``star``."""

    p: int
    star: StarKind
    H: np.ndarray
    residual_norms: np.ndarray
    method: str = "eigen-direct"
    eigenvalues: np.ndarray = field(default_factory=lambda: np.zeros(0))
    threshold_used: float = 0.0

    @property
    def dim(self) -> int:
        return int(self.H.shape[1])

    def column(self, i: int) -> Cochain:
        return Cochain(self.p, self.H[:, i])

    def is_star_orthonormal(self, c: SimplicialComplex, tol: float = _ORTHONORMAL_TOL) -> bool:
        if self.dim == 0:
            return True
        gram = self.H.T @ (hodge_star(c, self.p, self.star).matrix @ self.H)
        return bool(np.max(np.abs(gram - np.eye(self.dim))) <= tol)


@dataclass(frozen=True, eq=False)
class HomologyBasis:
    """Columns of ``B`` are integer p-chains in canonical coordinates."""

    p: int
    B: np.ndarray

    def __post_init__(self) -> None:
        mat = np.asarray(self.B, dtype=float)
        if mat.ndim == 1:
            mat = mat[:, None]
        object.__setattr__(self, "B", mat)

    @classmethod
    def from_chains(cls, p: int, chains: Sequence[Any]) -> "HomologyBasis":
        columns = [np.asarray(getattr(ch, "values", ch), dtype=float) for ch in chains]
        return cls(p, np.column_stack(columns) if columns else np.zeros((0, 0)))

    @property
    def dim(self) -> int:
        return int(self.B.shape[1])

    def check_cycles(self, c: SimplicialComplex) -> None:
        """Raise :class:`NotACycleError` unless every column has zero boundary."""
        if self.B.shape[0] != c.size(self.p):
            raise DimensionError(
                f"chains have {self.B.shape[0]} rows, complex has {c.size(self.p)} {self.p}-simplices"
            )
        if not np.array_equal(self.B, np.round(self.B)):
            raise NotACycleError("homology basis columns must have integer entries")
        if self.p == 0:
            return
        boundary = coboundary(c, self.p - 1).matrix.T @ self.B.astype(np.int64)
        bad = np.flatnonzero(np.any(np.asarray(boundary) != 0, axis=0))
        if bad.size:
            raise NotACycleError(f"chain column {int(bad[0])} is not a cycle")


@dataclass(frozen=True, eq=False)
class HarmonicResult:
    omega: Cochain
    alpha: Optional[Cochain]
    h: Cochain
    star: StarKind
    report: SolveReport
    diagnostics: Dict[str, Any] = field(default_factory=dict)
    method: str = "ls"
    system_nnz: Optional[int] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "method": self.method,
            "p": self.h.p,
            "star": self.star.kind,
            "system_nnz": self.system_nnz,
            "solve": self.report.to_dict(),
            "diagnostics": self.diagnostics,
        }


@dataclass
class ComparisonReport:
    p: int
    rows: List[Dict[str, Any]]
    pairwise: List[Dict[str, Any]]
    repeats: int = 1

    def to_dict(self) -> Dict[str, Any]:
        return {"p": self.p, "repeats": self.repeats, "rows": self.rows, "pairwise": self.pairwise}

    def row(self, method: str, star: str) -> Dict[str, Any]:
        for entry in self.rows:
            if entry["method"] == method and entry["star"] == star:
                return entry
        raise KeyError((method, star))


# ---------------------------------------------------------------------
# Cocycles
# ---------------------------------------------------------------------


def is_cocycle(c: SimplicialComplex, omega: Cochain, tol: Optional[float] = None) -> CocycleCheck:
    """Closedness test ``|d_p omega|_inf <= tol``.

    The default tolerance is exact zero for integer-valued cochains and
    ``settings.COCYCLE_TOL`` otherwise. Top-dimensional cochains are closed.
    """
    omega.check(c)
    values = omega.values
    if tol is None:
        tol = 0.0 if np.array_equal(values, np.round(values)) else settings.COCYCLE_TOL
    if omega.p >= c.dim:
        return CocycleCheck(True, 0.0, tol)
    image = coboundary(c, omega.p).matrix @ values
    residual = float(np.max(np.abs(image))) if image.size else 0.0
    return CocycleCheck(residual <= tol, residual, tol)


def require_cocycle(c: SimplicialComplex, omega: Cochain, tol: Optional[float] = None) -> None:
    check = is_cocycle(c, omega, tol)
    if not check.closed:
        raise CochainNotClosedError(check.residual, check.tol)


def _incidence(c: SimplicialComplex, top: int, facet: int) -> float:
    """[top : facet], the sign of ``facet`` in the boundary of ``top``."""
    facets = c.facet_indices(c.dim)[top]
    k = int(np.flatnonzero(facets == facet)[0])
    return -1.0 if k % 2 else 1.0


def _shared_facet(c: SimplicialComplex, a: int, b: int) -> int:
    facets = c.facet_indices(c.dim)
    shared = np.intersect1d(facets[a], facets[b])
    if a == b or shared.size == 0:
        raise DualPathError(f"top simplices {a} and {b} are not adjacent")
    return int(shared[0])


def _boundary_facet(c: SimplicialComplex, top: int, exclude: Iterable[int]) -> int:
    n = c.dim
    excluded = set(exclude)
    counts = c.coface_counts(n - 1)
    for facet in sorted(int(f) for f in c.facet_indices(n)[top]):
        if counts[facet] == 1 and facet not in excluded:
            return facet
    raise DualPathError(f"open dual path ends at top simplex {top}, which has no free boundary face")


def _left_to_right_sign(c: SimplicialComplex, facet: int, origin: np.ndarray, target: np.ndarray, top: int) -> float:
    """+1 when the canonical edge runs from the left of ``origin -> target`` to its right."""
    verts = c.vertices
    a, b = c.simplices(1)[facet]
    tangent = verts[b] - verts[a]
    heading = target - origin
    if c.embedding_dim == 2:
        left = np.array([-heading[1], heading[0]])
    else:
        tri = verts[c.simplices(2)[top]]
        normal = np.cross(tri[1] - tri[0], tri[2] - tri[0])
        left = np.cross(normal, heading)
    return 1.0 if float(tangent @ left) < 0.0 else -1.0


def cocycle_from_dual_chain(
    c: SimplicialComplex,
    dual_path: Sequence[int],
    closed: bool = False,
) -> Cochain:
    """Picket-fence (n-1)-cocycle dual to a path of top simplices.

    Every facet crossed by the path gets +-1 and everything else 0. Signs are
    propagated top by top so the result is exactly closed; the first sign is
    fixed by the left-to-right rule for surfaces (+1 when the edge points from
    the left of the directed path to its right) and by the first facet's
    incidence in the first top simplex otherwise. An open path starts and ends
    on the outer boundary: the first and last top simplices each contribute a
    boundary face.
    """
    n = c.dim
    path = [int(t) for t in dual_path]
    values = np.zeros(c.size(n - 1))
    if not path:
        return Cochain(n - 1, values)

    n_tops = c.size(n)
    bad = [t for t in path if not 0 <= t < n_tops]
    if bad:
        raise DualPathError(f"dual path references top simplex {bad[0]}, only {n_tops} exist")

    # crossings as (facet, top entered, top left); None marks the outside
    crossings: List[Tuple[int, Optional[int], Optional[int]]] = []
    inner = [_shared_facet(c, a, b) for a, b in zip(path[:-1], path[1:])]
    if closed:
        if len(path) < 2:
            raise DualPathError("a closed dual path needs at least two top simplices")
        closing = _shared_facet(c, path[-1], path[0])
        for k, facet in enumerate(inner):
            crossings.append((facet, path[k + 1], path[k]))
        crossings.append((closing, path[0], path[-1]))
    else:
        start = _boundary_facet(c, path[0], inner[:1])
        end_excluded = set(inner[-1:]) | ({start} if len(path) == 1 else set())
        end = _boundary_facet(c, path[-1], end_excluded)
        crossings.append((start, path[0], None))
        for k, facet in enumerate(inner):
            crossings.append((facet, path[k + 1], path[k]))
        crossings.append((end, None, path[-1]))

    facet0, entered0, left0 = crossings[0]
    if n == 2:
        bary = c.barycenters(2)
        if left0 is None:
            origin = c.barycenters(1)[facet0]
        else:
            origin = bary[left0]
        target = bary[entered0] if entered0 is not None else c.barycenters(1)[facet0]
        anchor_top = left0 if left0 is not None else entered0
        sign = _left_to_right_sign(c, facet0, origin, target, anchor_top)
    else:
        sign = _incidence(c, entered0 if entered0 is not None else left0, facet0)

    signs = [sign]
    for k in range(1, len(crossings)):
        facet_in, entered, _ = crossings[k - 1]
        facet_out, _, left = crossings[k]
        # closedness on the shared top: [t:f_in] e_in + [t:f_out] e_out = 0
        top = entered
        signs.append(-_incidence(c, top, facet_in) * _incidence(c, left, facet_out) * signs[-1])

    if closed:
        facet_last, entered_last, _ = crossings[-1]
        facet_first, _, left_first = crossings[0]
        balance = (
            _incidence(c, entered_last, facet_last) * signs[-1]
            + _incidence(c, left_first, facet_first) * signs[0]
        )
        if balance != 0.0:
            raise DualPathError("closed dual path is not consistently orientable around the loop")

    for (facet, _, _), sign in zip(crossings, signs):
        values[facet] += sign

    logger.debug("Picket fence with %d crossings on a %d-complex", len(crossings), n)
    return Cochain(n - 1, values)


# ---------------------------------------------------------------------
# Diagnostics
# ---------------------------------------------------------------------


def harmonic_residual(c: SimplicialComplex, star: StarLike, h: np.ndarray, p: int) -> float:
    """|star^{-1} Delta h|_star / |h|_star (0 for h = 0)."""
    h_norm = star_norm(c, p, star, h)
    if h_norm == 0.0:
        return 0.0
    weak = laplacian_apply(c, p, star, h)
    strong = star_solver(c, p, star).solve(weak)
    return math.sqrt(max(float(weak @ strong), 0.0)) / h_norm


def _diagnostics(
    c: SimplicialComplex,
    star: StarKind,
    omega: Cochain,
    h: np.ndarray,
    alpha: Optional[np.ndarray] = None,
) -> Dict[str, Any]:
    p = omega.p
    h_norm = star_norm(c, p, star, h)
    omega_norm = star_norm(c, p, star, omega.values)
    d_h = coboundary(c, p).matrix @ h if p < c.dim else np.zeros(0)
    delta_h = codifferential_apply(c, p, star, h) if p >= 1 else np.zeros(0)
    delta_norm = star_norm(c, p - 1, star, delta_h) if p >= 1 else 0.0

    out: Dict[str, Any] = {
        "h_star_norm": h_norm,
        "omega_star_norm": omega_norm,
        "d_h_norm": float(np.linalg.norm(d_h)),
        "delta_h_star_norm": delta_norm,
        "laplacian_residual": harmonic_residual(c, star, h, p),
    }
    if alpha is not None and p >= 1:
        d_alpha = coboundary(c, p - 1).matrix @ alpha
        d_alpha_norm = star_norm(c, p, star, d_alpha)
        out["d_alpha_star_norm"] = d_alpha_norm
        out["d_alpha_relative"] = d_alpha_norm / omega_norm if omega_norm else 0.0

    spots: List[float] = []
    if p >= 1 and h_norm > 0.0:
        rng = np.random.default_rng(settings.RANDOM_SEED)
        d_prev = coboundary(c, p - 1).matrix
        star_p = hodge_star(c, p, star).matrix
        for _ in range(_SPOT_CHECKS):
            grad = d_prev @ rng.standard_normal(c.size(p - 1))
            grad_norm = star_norm(c, p, star, grad)
            if grad_norm > 0.0:
                spots.append(float(h @ (star_p @ grad)) / (h_norm * grad_norm))
    out["gradient_orthogonality"] = spots
    return out


# ---------------------------------------------------------------------
# Least squares
# ---------------------------------------------------------------------


def _ls_matrix(c: SimplicialComplex, p: int, star: StarKind) -> sp.csr_matrix:
    def build() -> sp.csr_matrix:
        d_prev = coboundary(c, p - 1).matrix
        mat = (d_prev.T @ hodge_star(c, p, star).matrix @ d_prev).tocsr()
        return ((mat + mat.T) * 0.5).tocsr()

    return c.memo(("ls_matrix", p, star), build)


def _check_omega(c: SimplicialComplex, omega: Cochain, check_closed: bool, tol: Optional[float]) -> None:
    omega.check(c)
    if omega.p < 1:
        raise DimensionError("harmonic representatives need p >= 1")
    if check_closed:
        require_cocycle(c, omega, tol)


def harmonic_ls(
    c: SimplicialComplex,
    omega: Cochain,
    star: StarLike = "whitney",
    tol: Optional[float] = None,
    max_iter: Optional[int] = None,
    pin_vertex: Optional[int] = None,
    check_closed: bool = True,
    cocycle_tol: Optional[float] = None,
    diagnostics: bool = True,
) -> HarmonicResult:
    """Harmonic cochain cohomologous to ``omega`` via the least-squares normal equation.

    CG may return any kernel representative of ``alpha``; ``h = omega + d alpha``
    does not depend on it. ``pin_vertex`` (p = 1 only) fixes ``alpha`` at one
    vertex to zero, which makes ``alpha`` unique on connected complexes.
    Non-convergence is reported through ``result.report.converged``.
    """
    star = StarKind.coerce(star)
    _check_omega(c, omega, check_closed, cocycle_tol)
    p = omega.p
    d_prev = coboundary(c, p - 1).matrix
    system = _ls_matrix(c, p, star)
    rhs = -(d_prev.T @ (hodge_star(c, p, star).matrix @ omega.values))

    if pin_vertex is not None:
        if p != 1:
            raise DimensionError("pin_vertex only applies to 1-cochains")
        if not 0 <= pin_vertex < c.size(0):
            raise DimensionError(f"pin_vertex {pin_vertex} outside 0..{c.size(0) - 1}")
        keep = np.flatnonzero(np.arange(c.size(0)) != pin_vertex)
        reduced, report = cg_semidefinite(system[keep][:, keep], rhs[keep], tol=tol, max_iter=max_iter)
        alpha = np.zeros(c.size(0))
        alpha[keep] = reduced
    else:
        alpha, report = cg_semidefinite(system, rhs, tol=tol, max_iter=max_iter)

    h = omega.values + d_prev @ alpha
    logger.info(
        "Least squares (%s, p=%d): %d CG iterations, residual %.2e",
        star.kind,
        p,
        report.iterations,
        report.relative_residual,
    )
    return HarmonicResult(
        omega=omega,
        alpha=Cochain(p - 1, alpha),
        h=Cochain(p, h),
        star=star,
        report=report,
        diagnostics=_diagnostics(c, star, omega, h, alpha) if diagnostics else {},
        method="ls",
        system_nnz=int(system.nnz),
    )


# ---------------------------------------------------------------------
# Eigenvector methods
# ---------------------------------------------------------------------


def _expected_betti(c: SimplicialComplex, p: int) -> Optional[int]:
    info = c.memo(("summary",), lambda: summary(c))
    return None if info.betti is None else int(info.betti[p])


def _finish_basis(
    c: SimplicialComplex,
    p: int,
    star: StarKind,
    H: np.ndarray,
    method: str,
    eigenvalues: np.ndarray,
    threshold: float,
    harmonic_tol: Optional[float],
    check_betti: bool,
) -> HarmonicBasis:
    tol = settings.HARMONIC_TOL if harmonic_tol is None else harmonic_tol
    residuals = np.array([harmonic_residual(c, star, H[:, i], p) for i in range(H.shape[1])])
    if residuals.size and residuals.max() > tol:
        raise HarmonicBasisError(
            f"{method}: basis column residual {residuals.max():.2e} exceeds harmonic_tol {tol:.1e}"
        )
    if check_betti:
        expected = _expected_betti(c, p)
        if expected is not None and expected != H.shape[1]:
            raise BettiMismatchError(H.shape[1], expected, what=f"{method} basis for p={p}")
    logger.info("%s (%s, p=%d): %d harmonic cochains", method, star.kind, p, H.shape[1])
    return HarmonicBasis(p, star, H, residuals, method, np.asarray(eigenvalues), float(threshold))


def harmonic_basis_direct(
    c: SimplicialComplex,
    p: int,
    star: StarLike = "whitney",
    zero_tol_rel: Optional[float] = None,
    dense_limit: Optional[int] = None,
    harmonic_tol: Optional[float] = None,
    check_betti: bool = True,
) -> HarmonicBasis:
    """Zero eigenvectors of ``Delta_p u = lambda star_p u``, star-orthonormal."""
    star = StarKind.coerce(star)
    result = null_space_generalized(
        laplacian(c, p, star),
        hodge_star(c, p, star),
        zero_tol_rel=zero_tol_rel,
        dense_limit=dense_limit,
    )
    return _finish_basis(
        c, p, star, result.basis, "eigen-direct", result.eigenvalues, result.threshold_used,
        harmonic_tol, check_betti,
    )


def mixed_system(c: SimplicialComplex, p: int, star: StarLike) -> sp.csr_matrix:
    """[[-star_{p-1}, d^T star_p], [star_p d, d_p^T star_{p+1} d_p]] on C^{p-1} x C^p."""
    star = StarKind.coerce(star)
    if p < 1:
        raise DimensionError("the mixed system needs p >= 1")
    star_prev = hodge_star(c, p - 1, star).matrix
    star_p = hodge_star(c, p, star).matrix
    d_prev = coboundary(c, p - 1).matrix
    coupling = (star_p @ d_prev).tocsr()
    if p < c.dim:
        d_p = coboundary(c, p).matrix
        lower = d_p.T @ hodge_star(c, p + 1, star).matrix @ d_p
    else:
        lower = sp.csr_matrix((c.size(p), c.size(p)))
    return sp.bmat([[-star_prev, coupling.T], [coupling, lower]], format="csr")


def harmonic_basis_mixed(
    c: SimplicialComplex,
    p: int,
    star: StarLike = "whitney",
    zero_tol_rel: Optional[float] = None,
    dense_limit: Optional[int] = None,
    harmonic_tol: Optional[float] = None,
    check_betti: bool = True,
) -> HarmonicBasis:
    """Harmonic basis from the null space of the symmetric indefinite mixed system.

    Null vectors ``(sigma, u)`` must have ``sigma = 0``; a non-negligible
    ``sigma`` raises :class:`MixedSystemError`. Dense only.
    """
    star = StarKind.coerce(star)
    limit = settings.DENSE_LIMIT if dense_limit is None else int(dense_limit)
    if p == 0:
        return harmonic_basis_direct(c, 0, star, zero_tol_rel, limit, harmonic_tol, check_betti)

    n_sigma, n_u = c.size(p - 1), c.size(p)
    if n_sigma + n_u > limit:
        raise SizeLimitError(
            f"mixed system has {n_sigma + n_u} unknowns, above the dense limit {limit}"
        )
    system = mixed_system(c, p, star)
    weight = sp.block_diag(
        [hodge_star(c, p - 1, star).matrix, hodge_star(c, p, star).matrix], format="csr"
    )
    result = null_space_generalized(
        system, weight, zero_tol_rel=zero_tol_rel, dense_limit=limit, indefinite=True
    )
    sigma = result.basis[:n_sigma]
    u = result.basis[n_sigma:]
    for i in range(result.dim):
        s_norm = float(np.linalg.norm(sigma[:, i]))
        u_norm = float(np.linalg.norm(u[:, i]))
        if s_norm > _SIGMA_REL_TOL * u_norm:
            raise MixedSystemError(
                f"mixed null vector {i}: |sigma| = {s_norm:.2e} vs |u| = {u_norm:.2e}"
            )
    H = b_orthonormalize(u, hodge_star(c, p, star).matrix)
    return _finish_basis(
        c, p, star, H, "eigen-mixed", result.eigenvalues, result.threshold_used,
        harmonic_tol, check_betti,
    )


def basis_angles(c: SimplicialComplex, first: HarmonicBasis, second: HarmonicBasis) -> np.ndarray:
    """Principal angles between two bases in the star inner product of ``first``."""
    if first.p != second.p:
        raise DimensionError("bases of different degrees")
    if first.dim != second.dim:
        raise HarmonicBasisError(f"bases have {first.dim} and {second.dim} columns")
    return principal_angles(first.H, second.H, hodge_star(c, first.p, first.star).matrix)


# ---------------------------------------------------------------------
# Projection and pairing
# ---------------------------------------------------------------------


def project_to_harmonics(
    c: SimplicialComplex,
    basis: HarmonicBasis,
    omega: Cochain,
    check_closed: bool = True,
    diagnostics: bool = True,
) -> HarmonicResult:
    """Star-orthogonal projection of a cocycle onto span(H)."""
    start = time.perf_counter()
    omega.check(c, basis.p)
    if check_closed:
        require_cocycle(c, omega)
    if basis.dim == 0:
        raise HarmonicBasisError("cannot project onto an empty harmonic basis")

    star_p = hodge_star(c, basis.p, basis.star).matrix
    weighted = basis.H.T @ (star_p @ omega.values)
    if basis.is_star_orthonormal(c):
        coeffs, solves = weighted, 0
    else:
        try:
            coeffs = dense_solve(basis.H.T @ (star_p @ basis.H), weighted)
        except SingularSystemError as exc:
            raise HarmonicBasisError(f"degenerate harmonic basis: {exc}") from exc
        solves = 1
    h = basis.H @ coeffs
    report = SolveReport(solves, 0.0, True, time.perf_counter() - start, method="projection")
    return HarmonicResult(
        omega=omega,
        alpha=None,
        h=Cochain(basis.p, h),
        star=basis.star,
        report=report,
        diagnostics=_diagnostics(c, basis.star, omega, h) if diagnostics else {},
        method="projection",
        system_nnz=int(basis.H.size),
    )


def pair_homology(c: SimplicialComplex, basis: HarmonicBasis, cycles: HomologyBasis) -> np.ndarray:
    """H (B^T H)^{-1}: column i evaluates to 1 on cycle i and 0 on the others."""
    if cycles.p != basis.p:
        raise DimensionError(f"{cycles.p}-cycles cannot pair with {basis.p}-cochains")
    if cycles.dim != basis.dim:
        raise SingularPairingError(
            f"{cycles.dim} cycles for a {basis.dim}-dimensional harmonic space"
        )
    cycles.check_cycles(c)
    pairing = cycles.B.T @ basis.H
    try:
        return dense_solve(pairing.T, basis.H.T).T
    except SingularSystemError as exc:
        raise SingularPairingError(f"cycles do not pair with the harmonic basis: {exc}") from exc


# ---------------------------------------------------------------------
# Comparison systems
# ---------------------------------------------------------------------


def _inverse_star(c: SimplicialComplex, p: int, star: StarKind, limit: int, what: str) -> Any:
    solver = star_solver(c, p, star)
    if solver.diagonal is None and c.size(p) > limit:
        raise SizeLimitError(
            f"{what}: dense inverse of the whitney star_{p} ({c.size(p)} unknowns) "
            f"exceeds the dense limit {limit}"
        )
    return solver.inverse_matrix()


def _matrix_nnz(mat: Any) -> int:
    if sp.issparse(mat):
        return int(mat.nnz)
    return int(np.count_nonzero(mat))


def gu_yau(
    c: SimplicialComplex,
    omega: Cochain,
    star: StarLike = "dec",
    dense_limit: Optional[int] = None,
    tol: Optional[float] = None,
    check_closed: bool = True,
    diagnostics: bool = True,
) -> HarmonicResult:
    """Rectangular system d star^{-1} d^T star d alpha = -d star^{-1} d^T star omega.

    Solved in the least-squares sense; the system is consistent, so any
    solution gives the harmonic representative.
    """
    star = StarKind.coerce(star)
    limit = settings.DENSE_LIMIT if dense_limit is None else int(dense_limit)
    _check_omega(c, omega, check_closed, None)
    p = omega.p
    d_prev = coboundary(c, p - 1).matrix
    star_p = hodge_star(c, p, star).matrix
    inv_prev = _inverse_star(c, p - 1, star, limit, "gu_yau")

    pulled = (d_prev.T @ star_p).tocsr()
    projector = d_prev @ inv_prev
    system = projector @ (pulled @ d_prev)
    rhs = -(projector @ (pulled @ omega.values))
    if not sp.issparse(system):
        system = np.asarray(system)
    rhs = np.asarray(rhs).reshape(-1)

    alpha, report = least_squares_solve(system, rhs, dense_limit=limit, tol=tol)
    h = omega.values + d_prev @ alpha
    return HarmonicResult(
        omega=omega,
        alpha=Cochain(p - 1, alpha),
        h=Cochain(p, h),
        star=star,
        report=report,
        diagnostics=_diagnostics(c, star, omega, h, alpha) if diagnostics else {},
        method="gu-yau",
        system_nnz=_matrix_nnz(system),
    )


def desbrun_system(
    c: SimplicialComplex, p: int, star: StarLike, dense_limit: Optional[int] = None
) -> Tuple[Any, Any]:
    """(D, S): the operator d delta + delta d on C^{p-1} and its star-symmetrized form.

    ``S = star_{p-1} D`` is symmetric; its two terms carry opposite
    codifferential signs, so it is indefinite.
    """
    star = StarKind.coerce(star)
    limit = settings.DENSE_LIMIT if dense_limit is None else int(dense_limit)
    if p < 1:
        raise DimensionError("desbrun system needs p >= 1")
    star_p = hodge_star(c, p, star).matrix
    star_prev = hodge_star(c, p - 1, star).matrix
    d_prev = coboundary(c, p - 1).matrix
    inv_prev = _inverse_star(c, p - 1, star, limit, "desbrun")

    stiff = (d_prev.T @ star_p @ d_prev).tocsr()
    sign_p = adjoint_sign(p - 1)
    strong = sign_p * (inv_prev @ stiff)
    sym = sign_p * stiff
    if p >= 2:
        d_low = coboundary(c, p - 2).matrix
        inv_low = _inverse_star(c, p - 2, star, limit, "desbrun")
        sign_low = adjoint_sign(p - 2)
        down = d_low @ (inv_low @ (d_low.T @ star_prev))
        strong = strong + sign_low * down
        sym = sym + sign_low * (star_prev @ down)

    if sp.issparse(strong):
        strong = strong.tocsr()
    else:
        strong = np.asarray(strong)
    if sp.issparse(sym):
        sym = ((sym + sym.T) * 0.5).tocsr()
    else:
        sym = np.asarray(sym)
        sym = 0.5 * (sym + sym.T)
    return strong, sym


def desbrun(
    c: SimplicialComplex,
    omega: Cochain,
    star: StarLike = "dec",
    solver: str = "minres",
    dense_limit: Optional[int] = None,
    tol: Optional[float] = None,
    max_iter: Optional[int] = None,
    check_closed: bool = True,
    diagnostics: bool = True,
) -> HarmonicResult:
    """Poisson problem (d delta + delta d) alpha = -delta omega, h = omega + d alpha.

    ``solver="minres"`` runs MINRES on the star-symmetrized system;
    ``solver="superlu"`` factorizes the strong form directly and fails on
    singular systems (p = 1 always has constants in the kernel).
    """
    star = StarKind.coerce(star)
    _check_omega(c, omega, check_closed, None)
    p = omega.p
    strong, sym = desbrun_system(c, p, star, dense_limit)
    d_prev = coboundary(c, p - 1).matrix
    star_p = hodge_star(c, p, star).matrix
    pulled = d_prev.T @ (star_p @ omega.values)
    sign_p = adjoint_sign(p - 1)

    if solver == "minres":
        alpha, report = minres_solve(sym, -sign_p * pulled, tol=tol, max_iter=max_iter)
    elif solver == "superlu":
        rhs = -codifferential_apply(c, p, star, omega.values)
        start = time.perf_counter()
        mat = sp.csc_matrix(strong)
        try:
            alpha = spla.spsolve(mat, rhs)
        except RuntimeError as exc:
            raise SingularSystemError(f"SuperLU failed on the desbrun system: {exc}") from exc
        if not np.all(np.isfinite(alpha)):
            raise SingularSystemError("SuperLU: desbrun system is singular")
        denom = float(np.linalg.norm(rhs)) or 1.0
        rel = float(np.linalg.norm(mat @ alpha - rhs)) / denom
        report = SolveReport(1, rel, rel <= (tol or 1e-10), time.perf_counter() - start, method="superlu")
    else:
        raise ValueError(f"unknown desbrun solver {solver!r}; expected 'minres' or 'superlu'")

    h = omega.values + d_prev @ alpha
    return HarmonicResult(
        omega=omega,
        alpha=Cochain(p - 1, alpha),
        h=Cochain(p, h),
        star=star,
        report=report,
        diagnostics=_diagnostics(c, star, omega, h, alpha) if diagnostics else {},
        method="desbrun",
        system_nnz=_matrix_nnz(strong),
    )


# ---------------------------------------------------------------------
# Comparison study
# ---------------------------------------------------------------------


def _run_projection(c: SimplicialComplex, omega: Cochain, star: StarKind, **kw: Any) -> HarmonicResult:
    basis = harmonic_basis_direct(c, omega.p, star)
    result = project_to_harmonics(c, basis, omega, diagnostics=kw.get("diagnostics", True))
    return HarmonicResult(
        omega=result.omega,
        alpha=None,
        h=result.h,
        star=star,
        report=result.report,
        diagnostics=result.diagnostics,
        method="projection",
        system_nnz=laplacian(c, omega.p, star).nnz,
    )


METHODS: Mapping[str, Callable[..., HarmonicResult]] = {
    "ls": lambda c, omega, star, **kw: harmonic_ls(
        c, omega, star, tol=kw.get("tol"), max_iter=kw.get("max_iter"), diagnostics=kw.get("diagnostics", True),
    ),
    "gu-yau": lambda c, omega, star, **kw: gu_yau(
        c, omega, star, dense_limit=kw.get("dense_limit"), diagnostics=kw.get("diagnostics", True),
    ),
    "desbrun": lambda c, omega, star, **kw: desbrun(
        c, omega, star, solver=kw.get("desbrun_solver", "minres"), dense_limit=kw.get("dense_limit"),
        max_iter=kw.get("max_iter"),
        diagnostics=kw.get("diagnostics", True),
    ),
    "projection": _run_projection,
}


def compare_methods(
    c: SimplicialComplex,
    omega: Cochain,
    methods: Sequence[str] = ("ls", "desbrun"),
    stars: Sequence[StarLike] = ("dec", "whitney"),
    repeats: int = 1,
    **options: Any,
) -> ComparisonReport:
    """Run several methods and stars on one cocycle and tabulate the outcome.

    Every timed run starts from an empty operator cache so assembly is part of
    the wall time. Diagnostics are skipped inside the timed region; the
    residual is computed after the clock stops. Runs are sequential. A failing
    method becomes a row with ``error`` set. Pairwise star-norm differences are
    only formed between rows that used the same star.
    """
    if not methods:
        raise ValueError("compare_methods needs at least one method")
    unknown = [m for m in methods if m not in METHODS]
    if unknown:
        raise ValueError(f"unknown methods {unknown}; available: {sorted(METHODS)}")
    omega.check(c)
    require_cocycle(c, omega)
    repeats = max(1, int(repeats))
    untimed = {**options, "diagnostics": False}

    rows: List[Dict[str, Any]] = []
    harmonics: Dict[Tuple[str, str], np.ndarray] = {}
    kinds: Dict[str, StarKind] = {}
    for star_like in stars:
        star = StarKind.coerce(star_like)
        kinds[star.kind] = star
        for method in methods:
            row: Dict[str, Any] = {"method": method, "star": star.kind}
            times: List[float] = []
            try:
                for _ in range(repeats):
                    cold = c.without_cache()
                    start = time.perf_counter()
                    result = METHODS[method](cold, omega, star, **untimed)
                    times.append(time.perf_counter() - start)
                residual = harmonic_residual(c, star, result.h.values, omega.p)
            except HodgeKitError as exc:
                logger.warning("%s (%s) failed: %s", method, star.kind, exc)
                row.update({"nnz": None, "wall_time": None, "wall_time_min": None,
                            "residual": None, "converged": False, "error": str(exc)})
                rows.append(row)
                continue
            harmonics[(method, star.kind)] = result.h.values
            row.update({
                "nnz": result.system_nnz,
                "wall_time": float(np.mean(times)),
                "wall_time_min": float(np.min(times)),
                "residual": float(residual),
                "converged": bool(result.report.converged),
                "iterations": int(result.report.iterations),
                "error": None,
            })
            logger.info(
                "%s (%s): nnz=%s time=%.4fs residual=%.2e",
                method, star.kind, row["nnz"], row["wall_time"], row["residual"],
            )
            rows.append(row)

    pairwise: List[Dict[str, Any]] = []
    keys = list(harmonics)
    for i, a in enumerate(keys):
        for b in keys[i + 1 :]:
            if a[1] != b[1]:
                continue
            diff = harmonics[a] - harmonics[b]
            ref = star_norm(c, omega.p, kinds[a[1]], harmonics[a])
            dist = star_norm(c, omega.p, kinds[a[1]], diff)
            pairwise.append({
                "a": a[0], "b": b[0], "star": a[1],
                "star_norm_difference": dist,
                "relative": dist / ref if ref else dist,
            })
    return ComparisonReport(omega.p, rows, pairwise, repeats)
