"""Cochain / chain files and dual-path files.

Dense::

    cochain <p> <N>        (or: chain <p> <N>)
    <value>                N lines, canonical simplex order

Sparse::

    sparse-cochain <p> <N> <k>   (or: sparse-chain ...)
    <index> <value>              k lines

Dual path::

    dual-path <k> [open|closed]
    <top simplex index>          k lines

Values are written with 17 significant digits, so a write/read round trip is
bit-exact. ``#`` starts a comment.
"""

from __future__ import annotations

import logging
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from hodgekit.errors import CochainFormatError, DimensionError
from hodgekit.operators import Cochain

from .text import data_lines, read_text_safe, write_text_atomic

__all__ = ["read_cochain", "read_chain_basis", "write_cochain", "read_dual_path", "write_dual_path"]

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

_KINDS = ("cochain", "chain")


def _fmt(value: float) -> str:
    return format(float(value), ".17g")


def write_cochain(
    cochain: Cochain,
    path: PathLike,
    kind: str = "cochain",
    sparse: bool = False,
) -> Path:
    if kind not in _KINDS:
        raise ValueError(f"kind must be one of {_KINDS}")
    values = cochain.values
    if sparse:
        nonzero = np.flatnonzero(values)
        lines = [f"sparse-{kind} {cochain.p} {len(values)} {len(nonzero)}"]
        lines += [f"{i} {_fmt(values[i])}" for i in nonzero]
    else:
        lines = [f"{kind} {cochain.p} {len(values)}"]
        lines += [_fmt(v) for v in values]
    return write_text_atomic(path, "\n".join(lines) + "\n")


def read_cochain(
    path: PathLike,
    expected_p: Optional[int] = None,
    expected_size: Optional[int] = None,
) -> Tuple[str, Cochain]:
    """Return ``(kind, cochain)`` where kind is ``"cochain"`` or ``"chain"``."""
    path = Path(path)
    if not path.exists():
        raise CochainFormatError("file not found", path)
    lines = list(data_lines(read_text_safe(path, error=CochainFormatError)))
    if not lines:
        raise CochainFormatError("empty file", path, 1)

    header_line, header = lines[0]
    tag = header[0].lower()
    sparse = tag.startswith("sparse-")
    kind = tag[len("sparse-") :] if sparse else tag
    if kind not in _KINDS:
        raise CochainFormatError(f"unknown header {header[0]!r}", path, header_line)
    needed = 4 if sparse else 3
    if len(header) < needed:
        raise CochainFormatError(f"header needs {needed} fields", path, header_line)
    try:
        p, size = int(header[1]), int(header[2])
        count = int(header[3]) if sparse else size
    except ValueError as exc:
        raise CochainFormatError("header counts must be integers", path, header_line) from exc

    body = lines[1:]
    if len(body) != count:
        raise CochainFormatError(
            f"expected {count} value lines, found {len(body)}",
            path,
            body[-1][0] if body else header_line,
        )

    values = np.zeros(size)
    for k, (number, tokens) in enumerate(body):
        try:
            index = int(tokens[0]) if sparse else k
            value = float(tokens[1] if sparse else tokens[0])
        except (ValueError, IndexError) as exc:
            raise CochainFormatError("malformed value line", path, number) from exc
        if not 0 <= index < size:
            raise CochainFormatError(f"index {index} outside 0..{size - 1}", path, number)
        values[index] += value

    if expected_p is not None and p != expected_p:
        raise DimensionError(f"{path}: expected a {expected_p}-{kind}, file holds p = {p}")
    if expected_size is not None and size != expected_size:
        raise DimensionError(f"{path}: {kind} has {size} entries, complex has {expected_size}")
    logger.debug("Read %s-%s of size %d from %s", p, kind, size, path)
    return kind, Cochain(p, values)


def read_chain_basis(paths: Sequence[PathLike], p: int, size: int) -> np.ndarray:
    """Stack chain files into the columns of a matrix."""
    columns: List[np.ndarray] = []
    for path in paths:
        kind, chain = read_cochain(path, expected_p=p, expected_size=size)
        if kind != "chain":
            logger.warning("%s is labelled %r; reading it as a chain", path, kind)
        columns.append(chain.values)
    return np.column_stack(columns) if columns else np.zeros((size, 0))


def read_dual_path(path: PathLike) -> Tuple[List[int], Optional[bool]]:
    """Return ``(top simplex indices, closed flag or None when unspecified)``."""
    path = Path(path)
    if not path.exists():
        raise CochainFormatError("file not found", path)
    lines = list(data_lines(read_text_safe(path, error=CochainFormatError)))
    closed: Optional[bool] = None
    if lines and lines[0][1][0].lower() == "dual-path":
        number, header = lines[0]
        if len(header) > 2:
            if header[2].lower() not in ("open", "closed"):
                raise CochainFormatError("dual-path flag must be 'open' or 'closed'", path, number)
            closed = header[2].lower() == "closed"
        lines = lines[1:]
    indices: List[int] = []
    for number, tokens in lines:
        for token in tokens:
            try:
                indices.append(int(token))
            except ValueError as exc:
                raise CochainFormatError(f"expected a top simplex index, got {token!r}", path, number) from exc
    return indices, closed


def write_dual_path(indices: Sequence[int], path: PathLike, closed: bool = False) -> Path:
    lines = [f"dual-path {len(indices)} {'closed' if closed else 'open'}"]
    lines += [str(int(i)) for i in indices]
    return write_text_atomic(path, "\n".join(lines) + "\n")
