"""Deterministic worker-pool helper.

Per-vertex and per-sample computations are pure, so they may run on any
number of workers; results are always collected in input order, making
output identical regardless of thread count.
"""

from __future__ import annotations


def pmap(fn, items, threads: int = 1):
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    from concurrent.futures import ThreadPoolExecutor

    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))
