"""Optional thread fan-out for independent trials.

QH_THREADS caps parallelism; results are collected in submission order and
every trial derives its own seed, so output never depends on scheduling.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor


def thread_count() -> int:
    raw = os.environ.get("QH_THREADS", "").strip()
    if not raw:
        return 1
    try:
        n = int(raw)
    except ValueError as exc:
        raise ValueError(f"QH_THREADS must be a positive integer, got {raw!r}") from exc
    if n < 1:
        raise ValueError(f"QH_THREADS must be a positive integer, got {n}")
    return n


def parallel_map(fn, items):
    """Order-preserving map over independent items, threaded when allowed."""
    items = list(items)
    n = thread_count()
    if n <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))
