"""Thread pool helper shared by every parallel stage."""

import logging
from collections.abc import Callable, Iterable, Sequence
from concurrent.futures import ThreadPoolExecutor
from typing import TypeVar

from sylva_forge.core.config import get_settings

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


def resolve_workers(workers: int | None) -> int:
    """Explicit worker count, or the configured default."""
    if workers is None:
        return get_settings().threads
    return max(1, int(workers))


def parallel_map(
    fn: Callable[[T], R],
    items: Iterable[T],
    workers: int | None = None,
) -> list[R]:
    """
    Apply `fn` to every item and return results in input order.

    Results are collected by position, so the output never depends on
    how the pool schedules the work.
    """
    items = list(items)
    n_workers = min(resolve_workers(workers), max(1, len(items)))
    if n_workers <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=n_workers) as pool:
        return list(pool.map(fn, items))


def chunk_bounds(n: int, n_chunks: int) -> Sequence[tuple[int, int]]:
    """Split range(n) into at most n_chunks contiguous [start, stop) spans."""
    n_chunks = max(1, min(n_chunks, n)) if n > 0 else 1
    edges = [round(i * n / n_chunks) for i in range(n_chunks + 1)]
    return [(edges[i], edges[i + 1]) for i in range(n_chunks)]
