"""Order-preserving chunked map over top simplices."""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Optional, TypeVar

import numpy as np

from hodgekit.config.settings import settings

__all__ = ["chunk_bounds", "map_chunks"]

T = TypeVar("T")

logger = logging.getLogger(__name__)

_MIN_CHUNK = 2048


def chunk_bounds(n_items: int, n_chunks: int) -> List[tuple[int, int]]:
    """Split ``range(n_items)`` into at most ``n_chunks`` contiguous slices."""
    if n_items <= 0:
        return []
    n_chunks = max(1, min(n_chunks, n_items))
    edges = np.linspace(0, n_items, n_chunks + 1).astype(np.int64)
    return [(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:]) if b > a]


def map_chunks(
    func: Callable[[int, int], T],
    n_items: int,
    threads: Optional[int] = None,
) -> List[T]:
    """Apply ``func(start, stop)`` over contiguous chunks and return results in order.

    Results always come back in chunk order, so merging them by concatenation is
    deterministic regardless of thread scheduling. ``threads`` defaults to
    ``settings.THREADS`` (``HODGEKIT_THREADS``).
    """
    workers = max(1, int(threads if threads is not None else settings.THREADS))
    n_chunks = min(workers, max(1, n_items // _MIN_CHUNK))
    bounds = chunk_bounds(n_items, n_chunks) or [(0, 0)]

    if len(bounds) == 1:
        return [func(*bounds[0])]

    logger.debug("Assembling %d items in %d chunks on %d threads", n_items, len(bounds), workers)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda ab: func(*ab), bounds))
