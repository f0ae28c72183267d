"""hodgekit: harmonic cochains on simplicial complexes."""

from hodgekit.complex import ComplexSummary, SimplicialComplex, summary
from hodgekit.harmonic import (
    HarmonicBasis,
    HarmonicResult,
    HomologyBasis,
    cocycle_from_dual_chain,
    compare_methods,
    harmonic_basis_direct,
    harmonic_basis_mixed,
    harmonic_ls,
    is_cocycle,
    pair_homology,
    project_to_harmonics,
)
from hodgekit.operators import Cochain, StarKind, coboundary, hodge_star, laplacian

__version__ = "0.3.0"

__all__ = [
    "Cochain",
    "ComplexSummary",
    "HarmonicBasis",
    "HarmonicResult",
    "HomologyBasis",
    "SimplicialComplex",
    "StarKind",
    "coboundary",
    "cocycle_from_dual_chain",
    "compare_methods",
    "harmonic_basis_direct",
    "harmonic_basis_mixed",
    "harmonic_ls",
    "hodge_star",
    "is_cocycle",
    "laplacian",
    "pair_homology",
    "project_to_harmonics",
    "summary",
]
