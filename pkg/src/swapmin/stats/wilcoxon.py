"""One-tailed Wilcoxon signed-rank test for ``delta < 0``.

Ranks are handled as doubled integers (``2 * midrank``) throughout so tied
mid-ranks stay exact.  Under the null hypothesis each rank carries a
positive sign independently with probability 1/2, which gives two routes
to ``P(W+ <= observed)``:

* exact counting over all 2**n sign patterns via a subset-sum convolution
  (used for n <= 25, and for n <= 60 whenever ranks are tied),
* the normal approximation with tie-corrected variance and a 0.5 continuity
  correction, evaluated in log space, for everything larger.

The same :class:`SignedRankNull` object computes observed and resampled
p-values, so comparisons between them are exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from ..errors import DegenerateSample
from .normal import log_tail_normal_array

EXACT_MAX_N = 25
EXACT_MAX_N_TIES = 60
ZERO_METHODS = ("wilcox", "pratt")
EXACT, NORMAL = "exact", "normal-approximation"
_LOG2 = math.log(2.0)


@dataclass(frozen=True)
class TestResult:
    __test__ = False  # not a pytest class

    n_used: int
    statistic: float
    p: float
    log_p: float
    method: str


@dataclass
class RankedRows:
    """Signed-rank summaries of a batch of delta vectors (one per row)."""

    w2: np.ndarray  # doubled W+
    n: np.ndarray  # nonzero deltas per row
    s1: np.ndarray  # sum of doubled ranks
    s2: np.ndarray  # sum of squared doubled ranks
    plain: np.ndarray  # ranks are exactly 1..n
    ranks2: np.ndarray  # doubled ranks in ascending |delta| order, 0 for dropped zeros
    positive: np.ndarray  # sign of each entry of ranks2

    def rank_tuple(self, row: int) -> tuple[int, ...]:
        r = self.ranks2[row]
        return tuple(int(x) for x in r[r > 0])


def rank_rows(deltas, zero_method: str = "wilcox") -> RankedRows:
    """Mid-rank ``|delta|`` within each row of a 2-D array.

    ``wilcox`` drops zeros before ranking; ``pratt`` ranks them and then
    discards their ranks.
    """
    if zero_method not in ZERO_METHODS:
        raise ValueError(f"zero_method must be one of {ZERO_METHODS}")
    d = np.asarray(deltas, dtype=np.float64)
    if d.ndim != 2:
        raise ValueError("expected a 2-D array of deltas")
    if not np.isfinite(d).all():
        raise ValueError("deltas must be finite")
    m, k = d.shape
    a = np.abs(d)
    order = np.argsort(a, axis=1, kind="stable")
    srt = np.take_along_axis(a, order, axis=1)
    pos = np.take_along_axis(d > 0, order, axis=1)
    keep = srt != 0
    nzero = k - keep.sum(axis=1)

    idx = np.arange(k)
    first = np.ones((m, k), dtype=bool)
    first[:, 1:] = srt[:, 1:] != srt[:, :-1]
    last = np.ones((m, k), dtype=bool)
    last[:, :-1] = srt[:, :-1] != srt[:, 1:]
    start = np.maximum.accumulate(np.where(first, idx, 0), axis=1)
    end = np.minimum.accumulate(np.where(last, idx, k - 1)[:, ::-1], axis=1)[:, ::-1]

    r2 = (start + end + 2).astype(np.int64)
    if zero_method == "wilcox":
        r2 -= 2 * nzero[:, None]
    r2 = np.where(keep, r2, 0)
    tied = ((end > start) & keep).any(axis=1)
    plain = ~tied
    if zero_method == "pratt":
        plain &= nzero == 0
    return RankedRows(
        w2=(r2 * pos).sum(axis=1),
        n=keep.sum(axis=1),
        s1=r2.sum(axis=1),
        s2=(r2 * r2).sum(axis=1),
        plain=plain,
        ranks2=r2,
        positive=pos & keep,
    )


@lru_cache(maxsize=4096)
def _cumulative_counts(ranks2: tuple[int, ...]) -> np.ndarray:
    # number of sign patterns with doubled W+ <= w, for w = 0 .. sum(ranks2)
    total = sum(ranks2)
    counts = np.zeros(total + 1, dtype=np.int64)
    counts[0] = 1
    for r in ranks2:
        counts[r:] = counts[r:] + counts[:-r]
    out = np.cumsum(counts)
    out.setflags(write=False)
    return out


def _plain_ranks(n: int) -> tuple[int, ...]:
    return tuple(range(2, 2 * n + 1, 2))


def use_exact(n: int, plain: bool) -> bool:
    return n <= EXACT_MAX_N or (not plain and n <= EXACT_MAX_N_TIES)


class SignedRankNull:
    """Null distribution of W+ for a fixed multiset of ranks."""

    def __init__(self, ranks2: Sequence[int], plain: bool | None = None):
        self.ranks2 = tuple(sorted(int(r) for r in ranks2))
        self.n = len(self.ranks2)
        if self.n == 0:
            raise DegenerateSample("all deltas are zero")
        if plain is None:
            plain = self.ranks2 == _plain_ranks(self.n)
        self.method = EXACT if use_exact(self.n, plain) else NORMAL
        self.mean2 = sum(self.ranks2) / 2.0
        # Var(W+) = sum(r^2) / 4, r = ranks2 / 2
        self.sd = math.sqrt(sum(r * r for r in self.ranks2) / 16.0)

    def log_cdf(self, w2) -> np.ndarray:
        """``ln P(W+ <= w2 / 2)`` for an array of doubled statistics."""
        w2 = np.asarray(w2, dtype=np.int64)
        if self.method == EXACT:
            cum = _cumulative_counts(self.ranks2)
            return np.log(cum[w2].astype(np.float64)) - self.n * _LOG2
        z = (w2 / 2.0 + 0.5 - self.mean2 / 2.0) / self.sd
        return log_tail_normal_array(z)

    def p_exact(self, w2: int) -> float:
        """Exact ``P(W+ <= w2 / 2)`` regardless of ``method``; needs n <= 60."""
        cum = _cumulative_counts(self.ranks2)
        return int(cum[int(w2)]) / 2**self.n


@lru_cache(maxsize=4096)
def null_for(ranks2: tuple[int, ...]) -> SignedRankNull:
    return SignedRankNull(ranks2)


def row_log_pvalues(ranked: RankedRows) -> np.ndarray:
    """One-tailed log p-value per row; degenerate rows (no nonzero delta) get 0."""
    m = ranked.w2.shape[0]
    out = np.zeros(m, dtype=np.float64)
    n = ranked.n
    exact = (n > 0) & ((n <= EXACT_MAX_N) | (~ranked.plain & (n <= EXACT_MAX_N_TIES)))
    normal = (n > 0) & ~exact
    if normal.any():
        mean = ranked.s1[normal] / 4.0
        sd = np.sqrt(ranked.s2[normal] / 16.0)
        z = (ranked.w2[normal] / 2.0 + 0.5 - mean) / sd
        out[normal] = log_tail_normal_array(z)
    plain_exact = exact & ranked.plain
    for size in np.unique(n[plain_exact]):
        rows = plain_exact & (n == size)
        out[rows] = null_for(_plain_ranks(int(size))).log_cdf(ranked.w2[rows])
    for row in np.flatnonzero(exact & ~ranked.plain):
        out[row] = null_for(ranked.rank_tuple(row)).log_cdf(ranked.w2[row])
    return out


def wilcoxon_one_tailed_less(deltas: Sequence[float], zero_method: str = "wilcox") -> TestResult:
    """Signed-rank test of the alternative that ``deltas`` lean negative.

    Returns ``P(W+ <= observed)`` under the symmetric null, where ``W+`` is
    the rank sum of the positive deltas.

    >>> wilcoxon_one_tailed_less([-0.1, -0.2, -0.3]).p
    0.125
    """
    ranked = rank_rows(np.asarray(deltas, dtype=np.float64).reshape(1, -1), zero_method)
    n = int(ranked.n[0])
    if n == 0:
        raise DegenerateSample("all deltas are zero")
    null = null_for(ranked.rank_tuple(0))
    w2 = int(ranked.w2[0])
    log_p = float(null.log_cdf(w2))
    if null.method == EXACT:
        p = null.p_exact(w2)
    else:
        p = math.exp(log_p)
    return TestResult(n, w2 / 2.0, p, log_p, null.method)
