"""Ordered parallel map used by direction sweeps and Monte Carlo trials.

Every item is computed independently and results are collected in input
order, so reductions performed by the caller are bit-identical no matter
how many worker threads run.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor


def pmap(fn, items, threads: int = 1) -> list:
    items = list(items)
    if threads is None or threads <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=int(threads)) as pool:
        return list(pool.map(fn, items))
