"""Deterministic thread-pool map.

Results are gathered positionally, so the output never depends on the
number of worker threads; callers that need randomness should hand each
item its own seed (for example via numpy SeedSequence.spawn) instead of
sharing one generator across items.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
import os

__all__ = ["pmap", "resolve_threads"]

_THREADS_ENV = "GIBBS_KDV_THREADS"


def resolve_threads(threads: int | None = None) -> int:
    """Explicit argument wins, then the GIBBS_KDV_THREADS variable, then 1."""
    if threads is not None:
        if threads < 1:
            raise ValueError("threads must be >= 1")
        return threads
    env = os.environ.get(_THREADS_ENV)
    if env:
        n = int(env)
        if n < 1:
            raise ValueError(f"{_THREADS_ENV} must be >= 1")
        return n
    return 1


def pmap(fn, items, threads: int | None = None) -> list:
    """Map fn over items, preserving order; threads resolved as above."""
    items = list(items)
    n = resolve_threads(threads)
    if n == 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))
