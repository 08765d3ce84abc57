"""Deterministic fan-out of independent restarts over a thread pool."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Sequence, TypeVar

import numpy as np

T = TypeVar("T")

ENV_THREADS = "HOPFLAX_THREADS"


def thread_count() -> int:
    """Worker cap from HOPFLAX_THREADS; 0 or unset means one per CPU."""
    raw = os.environ.get(ENV_THREADS, "0").strip() or "0"
    try:
        n = int(raw)
    except ValueError:
        n = 0
    if n <= 0:
        n = os.cpu_count() or 1
    return n


def restart_rngs(seed: int, count: int) -> List[np.random.Generator]:
    """One independent generator per restart, fixed by (seed, index) alone."""
    children = np.random.SeedSequence(int(seed)).spawn(int(count))
    return [np.random.default_rng(c) for c in children]


def map_ordered(fn: Callable[[int], T], count: int) -> List[T]:
    """``[fn(0), ..., fn(count - 1)]``; the result order never depends on scheduling."""
    workers = min(thread_count(), max(1, count))
    if workers == 1:
        return [fn(i) for i in range(count)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(count)))


def argmax_lowest(values: Sequence[float]) -> int:
    """Index of the largest value, lowest index on ties; -1 if all are -inf/NaN."""
    best, best_i = -np.inf, -1
    for i, v in enumerate(values):
        if v > best:
            best, best_i = v, i
    return best_i
