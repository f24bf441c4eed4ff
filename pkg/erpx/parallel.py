"""
Ordered task execution on a thread pool.

The formation driver hands independent, pure fitting tasks to `map_ordered`.
Results always come back in input order, so the pool size affects wall time
only. The heavy work inside each task (scikit-learn's coordinate descent and
tree builder) runs in compiled code that releases the GIL, so threads fit in
parallel.
"""
from collections.abc import Callable, Iterable
from concurrent.futures import ThreadPoolExecutor
from typing import TypeVar

T = TypeVar("T")
R = TypeVar("R")


def map_ordered(fn: Callable[[T], R], items: Iterable[T], threads: int = 1) -> list[R]:
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=min(threads, len(items))) as pool:
        return list(pool.map(fn, items))
