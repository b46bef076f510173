"""Small shared helpers."""

import os
from concurrent.futures import ThreadPoolExecutor


def hardware_threads():
    return os.cpu_count() or 1


def pmap(fn, items, threads):
    """Map preserving input order; thread-parallel when threads > 1.

    Work items must be independent; results are collected in input order so
    downstream reductions are deterministic at any thread count.
    """
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))
