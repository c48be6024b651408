"""Chunked, order-preserving parallel map for trajectory ensembles.

Chunk boundaries depend only on the shot count, never on the worker count, so
results are identical for any GRIDSIM_THREADS setting.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

from threadpoolctl import threadpool_limits

CHUNK = 100


def worker_count() -> int:
    raw = os.environ.get("GRIDSIM_THREADS")
    if raw:
        try:
            n = int(raw)
        except ValueError:
            raise ValueError(f"GRIDSIM_THREADS must be an integer, got {raw!r}") from None
        return max(1, n)
    return os.cpu_count() or 1


def chunks(n: int, size: int = CHUNK) -> list[tuple[int, int]]:
    return [(s, min(s + size, n)) for s in range(0, n, size)]


def map_chunks(fn, n: int, size: int = CHUNK) -> list:
    """Call ``fn(start, stop)`` for each chunk of ``range(n)``; results in chunk order."""
    parts = chunks(n, size)
    workers = min(worker_count(), len(parts)) or 1
    # One BLAS thread per worker keeps results independent of scheduling.
    with threadpool_limits(limits=1):
        if workers == 1:
            return [fn(a, b) for a, b in parts]
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(lambda ab: fn(*ab), parts))
