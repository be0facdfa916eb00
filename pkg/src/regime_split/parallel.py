"""Order-preserving parallel map over trial indices."""

from __future__ import annotations

import os
from typing import Callable, TypeVar

from joblib import Parallel, delayed

T = TypeVar("T")

THREADS_ENV = "REGIME_SPLIT_THREADS"


def worker_count(requested: int | None = None) -> int:
    """``requested``, else ``$REGIME_SPLIT_THREADS``, else the CPU count."""
    if requested is not None:
        return max(1, int(requested))
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return os.cpu_count() or 1


def _chunk(fn: Callable[[int], T], lo: int, hi: int) -> list[T]:
    return [fn(i) for i in range(lo, hi)]


def map_indexed(fn: Callable[[int], T], count: int, workers: int | None = None) -> list[T]:
    """``[fn(0), ..., fn(count - 1)]``, computed in contiguous chunks.

    Results come back in index order, so output never depends on the worker
    count as long as ``fn`` seeds itself from its index.
    """
    w = min(worker_count(workers), max(count, 1))
    if w == 1:
        return _chunk(fn, 0, count)
    n_chunks = 4 * w
    bounds = [count * i // n_chunks for i in range(n_chunks + 1)]
    parts = Parallel(n_jobs=w)(delayed(_chunk)(fn, lo, hi) for lo, hi in zip(bounds, bounds[1:]) if hi > lo)
    return [r for part in parts for r in part]
