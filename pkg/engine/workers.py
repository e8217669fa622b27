"""Deterministic chunked fan-out over particle index ranges."""

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Optional, Tuple
import numpy as np

from config.settings import get_settings

logger = logging.getLogger(__name__)

_MIN_CHUNK = 256


def resolve_workers(workers: Optional[int]) -> int:
    if workers is None:
        return get_settings().runtime.workers
    if workers < 1:
        raise ValueError(f"workers must be >= 1, got {workers}")
    return workers


def chunk_bounds(n: int, workers: int) -> List[Tuple[int, int]]:
    """Contiguous [start, stop) ranges covering 0..n, at most one per worker."""
    count = max(1, min(workers, n // _MIN_CHUNK or 1))
    edges = np.linspace(0, n, count + 1).astype(int)
    return [(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:]) if b > a]


def map_chunks(fn: Callable[[int, int], np.ndarray], n: int, workers: int = 1) -> np.ndarray:
    """Evaluate fn on index chunks and concatenate the results in index order.

    Each chunk result depends only on its own index range, so the output is
    the same for every worker count.
    """
    bounds = chunk_bounds(n, workers)
    if len(bounds) == 1:
        return fn(0, n)
    with ThreadPoolExecutor(max_workers=len(bounds)) as pool:
        parts = list(pool.map(lambda b: fn(*b), bounds))
    return np.concatenate(parts, axis=0)
