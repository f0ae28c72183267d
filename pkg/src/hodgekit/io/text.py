"""BOM-aware text reading and all-or-nothing text writing."""

from __future__ import annotations

import os
from pathlib import Path
from typing import Iterator, List, Tuple, Type, Union

from hodgekit.errors import MeshParseError

PathLike = Union[str, Path]

UTF8_BOM = b"\xef\xbb\xbf"


def _ensure_path(path: PathLike) -> Path:
    return path if isinstance(path, Path) else Path(path)


def read_text_safe(
    path: PathLike,
    *,
    encoding: str = "utf-8",
    error: Type[MeshParseError] = MeshParseError,
) -> str:
    """Read text, dropping a leading UTF-8 BOM.

    Undecodable bytes raise ``error`` with the line they sit on.
    """
    file_path = _ensure_path(path)
    data = file_path.read_bytes()
    if data.startswith(UTF8_BOM):
        data = data[len(UTF8_BOM) :]
    try:
        return data.decode(encoding)
    except UnicodeDecodeError as exc:
        line = data.count(b"\n", 0, exc.start) + 1
        raise error(f"invalid {encoding} byte 0x{data[exc.start]:02x}", file_path, line) from exc


def data_lines(text: str, comment: str = "#") -> Iterator[Tuple[int, List[str]]]:
    """Yield ``(line_number, tokens)`` for non-empty lines with comments stripped."""
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split(comment, 1)[0].strip()
        if line:
            yield number, line.split()


def write_text_atomic(path: PathLike, text: str, *, encoding: str = "utf-8") -> Path:
    """Write ``text`` to a sibling temp file and move it into place."""
    file_path = _ensure_path(path)
    file_path.parent.mkdir(parents=True, exist_ok=True)
    tmp = file_path.with_name(f".{file_path.name}.tmp")
    with tmp.open("w", encoding=encoding, newline="\n") as stream:
        stream.write(text)
    os.replace(tmp, file_path)
    return file_path


__all__ = ["UTF8_BOM", "data_lines", "read_text_safe", "write_text_atomic"]
