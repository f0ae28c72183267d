"""Exception hierarchy for hodgekit.

Every error carries an ``exit_code`` which the command-line front end maps
directly to the process status:

* 2 - unreadable input (mesh or cochain files)
* 3 - invalid input cochain, chain or dual path
* 4 - solver or operator failure
* 5 - internal consistency failure (Betti mismatch)
"""

from __future__ import annotations

from pathlib import Path
from typing import Optional

__all__ = [
    "HodgeKitError",
    "MeshParseError",
    "DanglingVertexError",
    "NonManifoldError",
    "CochainFormatError",
    "InvalidInputError",
    "DimensionError",
    "CochainNotClosedError",
    "DualPathError",
    "NotACycleError",
    "OperatorError",
    "DegenerateSimplexError",
    "IndefiniteStarError",
    "SolverError",
    "ConvergenceError",
    "InconsistentSystemError",
    "SingularSystemError",
    "SizeLimitError",
    "HarmonicBasisError",
    "MixedSystemError",
    "SingularPairingError",
    "BettiMismatchError",
]


class HodgeKitError(RuntimeError):
    """Base class for all errors raised by hodgekit."""

    exit_code: int = 1


# --- input parsing (exit 2) ------------------------------------------------


class MeshParseError(HodgeKitError):
    """Raised when a mesh file cannot be parsed."""

    exit_code = 2

    def __init__(self, message: str, path: Optional[Path] = None, line: Optional[int] = None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        elif line is not None:
            where = f"line {line}: "
        super().__init__(f"{where}{message}")


class DanglingVertexError(MeshParseError):
    """A top simplex references a vertex index that does not exist."""


class NonManifoldError(HodgeKitError):
    exit_code = 2


class CochainFormatError(MeshParseError):
    """Raised when a cochain, chain or dual-path file is malformed."""


# --- invalid cochains and chains (exit 3) ----------------------------------


class InvalidInputError(HodgeKitError):
    exit_code = 3


class DimensionError(InvalidInputError, ValueError):
    """Cochain dimension or length does not match the complex."""


class CochainNotClosedError(InvalidInputError):
    """The input cochain is not a cocycle."""

    def __init__(self, residual: float, tol: float):
        self.residual = float(residual)
        self.tol = float(tol)
        super().__init__(f"cochain is not closed: |d omega|_inf = {residual:.3e} > tol {tol:.1e}")


class DualPathError(InvalidInputError):
    pass


class NotACycleError(InvalidInputError):
    """A homology basis column has nonzero boundary."""


# --- operators and solvers (exit 4) ----------------------------------------


class OperatorError(HodgeKitError):
    exit_code = 4


class DegenerateSimplexError(OperatorError):
    """A zero-volume simplex appears where an operator must divide by its measure."""


class IndefiniteStarError(OperatorError):
    """A DEC Hodge star has nonpositive diagonal entries."""


class SolverError(HodgeKitError):
    exit_code = 4


class ConvergenceError(SolverError):
    pass


class InconsistentSystemError(SolverError):
    """Right-hand side is not in the range of a semidefinite operator."""


class SingularSystemError(SolverError):
    pass


class SizeLimitError(SolverError):
    """A dense path was requested above its configured size limit."""


class HarmonicBasisError(SolverError):
    pass


class MixedSystemError(HarmonicBasisError):
    """Null vectors of the mixed system carry a non-negligible sigma part."""


class SingularPairingError(SolverError):
    pass


# --- internal consistency (exit 5) -----------------------------------------


class BettiMismatchError(HodgeKitError):
    exit_code = 5

    def __init__(self, found: int, expected: int, what: str = "harmonic basis"):
        self.found = int(found)
        self.expected = int(expected)
        super().__init__(f"{what} has {found} columns but the Betti number is {expected}")
