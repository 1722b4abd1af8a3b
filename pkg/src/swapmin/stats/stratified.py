"""Variety sampling: one language per family, repeated, with a CI on the p-values."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .families import family_deltas
from .streams import BLOCK_SIZE, block_generator, map_blocks
from .wilcoxon import rank_rows, row_log_pvalues

DEFAULT_SAMPLES = 10**6
DEFAULT_CONFIDENCE = 0.99


@dataclass(frozen=True)
class StratifiedCI:
    n_samples: int
    confidence: float
    lower: float
    upper: float
    seed: int
    n_families: int
    median: float
    # draws in which every picked delta was zero; recorded with p = 1
    n_degenerate: int


def _sample(table, n_samples, seed, zero_method, workers, block_size):
    names = sorted(table)
    sizes = np.array([table[n].size for n in names], dtype=np.int64)
    if (sizes == 0).any():
        raise ValueError("every family needs at least one language")
    flat = np.concatenate([table[n] for n in names])
    offsets = np.concatenate([[0], np.cumsum(sizes)[:-1]])

    def run(block, lo, hi):
        u = block_generator(seed, block).random((hi - lo, len(names)))
        pick = np.minimum((u * sizes).astype(np.int64), sizes - 1)
        ranked = rank_rows(flat[offsets + pick], zero_method)
        return row_log_pvalues(ranked), ranked.n == 0

    parts = map_blocks(run, n_samples, workers, block_size)
    return np.concatenate([p for p, _ in parts]), np.concatenate([d for _, d in parts])


def stratified_log_pvalues(
    families,
    n_samples: int,
    seed: int = 0,
    zero_method: str = "wilcox",
    workers: int = 1,
    block_size: int = BLOCK_SIZE,
) -> np.ndarray:
    """Log p-value of the signed-rank test for each of ``n_samples`` draws.

    Draw ``k`` picks, for each family, the member at index
    ``floor(u * size)`` with ``u`` from the stream of ``(seed, k)``.
    Draws where every picked delta is zero get log p = 0.
    """
    return _sample(family_deltas(families), n_samples, seed, zero_method, workers, block_size)[0]


def stratified_ci(
    families,
    n_samples: int = DEFAULT_SAMPLES,
    confidence: float = DEFAULT_CONFIDENCE,
    seed: int = 0,
    zero_method: str = "wilcox",
    workers: int = 1,
    block_size: int = BLOCK_SIZE,
) -> StratifiedCI:
    """Equal-tail empirical interval of the stratified p-value distribution."""
    table = family_deltas(families)
    if len(table) < 2:
        raise ValueError("stratified sampling needs at least 2 families")
    if n_samples < 100:
        raise ValueError("n_samples must be >= 100")
    if not 0 < confidence < 1:
        raise ValueError("confidence must lie in (0, 1)")
    log_p, degenerate = _sample(table, n_samples, seed, zero_method, workers, block_size)
    p = np.exp(log_p)
    tail = (1.0 - confidence) / 2.0
    lower, median, upper = np.quantile(p, [tail, 0.5, 1.0 - tail])
    return StratifiedCI(
        n_samples=n_samples,
        confidence=confidence,
        lower=float(lower),
        upper=float(upper),
        seed=seed,
        n_families=len(table),
        median=float(median),
        n_degenerate=int(degenerate.sum()),
    )
