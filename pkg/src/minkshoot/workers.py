"""Order-preserving job map over a process pool."""

from __future__ import annotations

import logging
from collections.abc import Callable, Iterable
from concurrent.futures import ProcessPoolExecutor
from typing import TypeVar

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


def map_jobs(func: Callable[[T], R], items: Iterable[T], jobs: int = 1) -> list[R]:
    """Apply ``func`` to every item, in input order.

    Runs in-process for ``jobs <= 1``. Otherwise ``func`` and the items must
    be picklable (module-level callables, partials of them).
    """
    items = list(items)
    if jobs <= 1 or len(items) <= 1:
        return [func(item) for item in items]
    workers = min(jobs, len(items))
    chunksize = max(1, len(items) // (4 * workers))
    logger.debug("mapping %d jobs over %d workers", len(items), workers)
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, items, chunksize=chunksize))
