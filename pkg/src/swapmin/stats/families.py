"""Per-family signed-rank tests and step-down minP adjustment."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .streams import BLOCK_SIZE, block_generator, map_blocks
from .wilcoxon import TestResult, null_for, rank_rows, wilcoxon_one_tailed_less

log = logging.getLogger(__name__)


def family_deltas(families) -> dict[str, np.ndarray]:
    """Normalize ``{name: deltas}`` or a sequence of ``FamilyGroup`` to arrays."""
    if isinstance(families, Mapping):
        items = families.items()
    else:
        items = ((g.family, g.deltas()) for g in families)
    out = {}
    for name, deltas in items:
        if name in out:
            raise ValueError(f"duplicate family {name!r}")
        out[name] = np.asarray(deltas, dtype=np.float64).ravel()
    return out


def test_each_family(families, zero_method: str = "wilcox") -> tuple[list[tuple[str, TestResult]], list[str]]:
    """Run the one-tailed signed-rank test inside every family.

    Returns the testable families with their results, sorted by name, and
    the names of families whose deltas are all zero.
    """
    results, untestable = [], []
    for name, deltas in sorted(family_deltas(families).items()):
        if not np.any(deltas != 0):
            untestable.append(name)
            continue
        results.append((name, wilcoxon_one_tailed_less(deltas, zero_method)))
    return results, untestable


test_each_family.__test__ = False


@dataclass(frozen=True)
class FamilyTestReport:
    family: str
    n_languages: int
    n_used: int
    statistic: float
    raw_p: float
    raw_log_p: float
    method: str
    # step-down Monte Carlo estimate before flooring at raw_p
    minp_estimate: float
    adjusted_p: float


class _Family:
    def __init__(self, name, deltas, zero_method):
        ranked = rank_rows(deltas.reshape(1, -1), zero_method)
        self.name = name
        self.n_languages = deltas.size
        self.ranks2 = ranked.ranks2[0][ranked.ranks2[0] > 0]
        self.null = null_for(ranked.rank_tuple(0))
        self.w2 = int(ranked.w2[0])
        self.log_p = float(self.null.log_cdf(self.w2))
        self.result = wilcoxon_one_tailed_less(deltas, zero_method)


def adjust_sd_minp(
    families,
    n_resamples: int = 10_000,
    seed: int = 0,
    zero_method: str = "wilcox",
    workers: int = 1,
    block_size: int = BLOCK_SIZE,
) -> list[FamilyTestReport]:
    """Step-down minP adjusted p-values for the family tests.

    The joint null is simulated by flipping the sign of every language's
    delta independently; each resample recomputes all family p-values.
    For families sorted by raw p, step ``j`` estimates the probability that
    the smallest resampled p among families ``j..K`` is at most the ``j``-th
    raw p, using ``(count + 1) / (n_resamples + 1)``.  The estimates are made
    non-decreasing along the sorted order and finally floored at the raw p.
    Families with only zero deltas are skipped.  Reports come back in
    ascending order of raw p.
    """
    if n_resamples < 1:
        raise ValueError("n_resamples must be >= 1")
    fams = [
        _Family(name, d, zero_method)
        for name, d in family_deltas(families).items()
        if np.any(d != 0)
    ]
    if not fams:
        return []
    fams.sort(key=lambda f: (f.log_p, f.name))
    raw = np.array([f.log_p for f in fams])
    sizes = [f.ranks2.size for f in fams]
    offsets = np.cumsum([0] + sizes)

    def run(block, lo, hi):
        rng = block_generator(seed, block)
        flips = rng.integers(0, 2, size=(hi - lo, offsets[-1]), dtype=np.int8)
        logp = np.empty((hi - lo, len(fams)))
        for j, f in enumerate(fams):
            # float matmul is exact here: rank sums stay far below 2**53
            w2 = (flips[:, offsets[j]:offsets[j + 1]].astype(np.float64) @ f.ranks2.astype(np.float64)).astype(np.int64)
            logp[:, j] = f.null.log_cdf(w2)
        # successive minima over families j..K
        tail_min = np.minimum.accumulate(logp[:, ::-1], axis=1)[:, ::-1]
        return (tail_min <= raw).sum(axis=0)

    hits = np.sum(map_blocks(run, n_resamples, workers, block_size), axis=0)
    estimate = np.maximum.accumulate((hits + 1) / (n_resamples + 1))
    reports = []
    for f, est in zip(fams, estimate):
        reports.append(
            FamilyTestReport(
                family=f.name,
                n_languages=f.n_languages,
                n_used=f.result.n_used,
                statistic=f.result.statistic,
                raw_p=f.result.p,
                raw_log_p=f.log_p,
                method=f.result.method,
                minp_estimate=float(est),
                adjusted_p=float(min(1.0, max(est, f.result.p))),
            )
        )
    return reports


def bonferroni(raw_p: Sequence[float]) -> list[float]:
    """Bonferroni cross-check for the minP adjustment."""
    k = len(raw_p)
    return [min(1.0, k * p) for p in raw_p]


def alpha_sweep(reports: Iterable[FamilyTestReport]) -> list[dict]:
    """Backward-cumulative family counts at every achieved adjusted p-value.

    One row per family, ordered by adjusted p: the level ``alpha`` (that
    family's adjusted p), how many families have adjusted p <= alpha, and
    the family's number of languages.
    """
    reps = sorted(reports, key=lambda r: (r.adjusted_p, r.family))
    levels = np.array([r.adjusted_p for r in reps])
    rows = []
    for r in reps:
        rows.append(
            {
                "alpha": r.adjusted_p,
                "families_at_or_below": int(np.searchsorted(levels, r.adjusted_p, side="right")),
                "family": r.family,
                "n_languages": r.n_languages,
            }
        )
    return rows
