"""Reproducible random streams for parallel Monte Carlo loops.

Work is cut into fixed-size blocks and block ``b`` draws from a Philox
generator keyed by the master seed and advanced by ``b * 2**128``.  The
random numbers used by iteration ``k`` therefore depend only on
``(seed, k)``, never on how many threads processed the blocks.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, TypeVar

import numpy as np

T = TypeVar("T")

BLOCK_SIZE = 4096


def block_generator(seed: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=int(seed)).jumped(int(block)))


def block_bounds(n_items: int, block_size: int = BLOCK_SIZE) -> list[tuple[int, int]]:
    return [(lo, min(lo + block_size, n_items)) for lo in range(0, n_items, block_size)]


def map_blocks(fn: Callable[[int, int, int], T], n_items: int, workers: int = 1, block_size: int = BLOCK_SIZE) -> list[T]:
    """Apply ``fn(block, lo, hi)`` to every block, results in block order."""
    bounds = block_bounds(n_items, block_size)
    if workers <= 1 or len(bounds) <= 1:
        return [fn(b, lo, hi) for b, (lo, hi) in enumerate(bounds)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(fn, b, lo, hi) for b, (lo, hi) in enumerate(bounds)]
        return [f.result() for f in futures]
