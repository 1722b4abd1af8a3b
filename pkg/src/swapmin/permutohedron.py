"""Orders of subject, object and verb, their permutohedron and per-language metrics.

The six orders are kept in a fixed canonical sequence that walks the hexagon
(SOV, SVO, VSO, VOS, OVS, OSV), so index ``i`` and ``i + 1`` (mod 6) are
always one adjacent swap apart.  Every table, TSV and report uses this order.

Metrics computed from integer counts are evaluated with exact integer
arithmetic and rounded once at the end.  That makes them invariant under
scaling the counts and makes ``mean_swap_distance == random_baseline``
detectable exactly, which the signed-rank test relies on to drop zeros.
"""

from __future__ import annotations

import enum
import itertools
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Mapping, Sequence

import numpy as np

from .errors import InvalidDistribution

DEFAULT_RHO0 = 0.5
PROB_SUM_TOL = 1e-9


class Order(enum.Enum):
    SOV = "SOV"
    SVO = "SVO"
    VSO = "VSO"
    VOS = "VOS"
    OVS = "OVS"
    OSV = "OSV"

    @property
    def index(self) -> int:
        return _INDEX[self]

    @classmethod
    def from_index(cls, i: int) -> "Order":
        return ORDERS[i]

    @classmethod
    def parse(cls, label: str) -> "Order":
        try:
            return cls(label.strip().upper())
        except ValueError:
            raise ValueError(f"unknown order label {label!r}") from None

    def __str__(self):
        return self.value


ORDERS: tuple[Order, ...] = tuple(Order)
_INDEX = {o: i for i, o in enumerate(ORDERS)}


def inversion_count(a: Order, b: Order) -> int:
    """Number of constituent pairs that appear in opposite relative order in a and b."""
    pos = {c: i for i, c in enumerate(b.value)}
    seq = [pos[c] for c in a.value]
    return sum(1 for i, j in itertools.combinations(range(3), 2) if seq[i] > seq[j])


def _adjacent_swaps(order: Order) -> list[Order]:
    s = order.value
    return [Order(s[:i] + s[i + 1] + s[i] + s[i + 2:]) for i in range(2)]


def permutohedron_edges() -> list[tuple[Order, Order]]:
    edges = set()
    for o in ORDERS:
        for p in _adjacent_swaps(o):
            edges.add(tuple(sorted((o, p), key=lambda x: x.index)))
    return sorted(edges, key=lambda e: (e[0].index, e[1].index))


def graph_distances() -> np.ndarray:
    """All-pairs shortest path lengths on the permutohedron, by breadth-first search."""
    d = np.full((6, 6), -1, dtype=np.int64)
    for src in ORDERS:
        d[src.index, src.index] = 0
        queue = deque([src])
        while queue:
            u = queue.popleft()
            for v in _adjacent_swaps(u):
                if d[src.index, v.index] < 0:
                    d[src.index, v.index] = d[src.index, u.index] + 1
                    queue.append(v)
    return d


def _inversion_matrix() -> np.ndarray:
    d = np.array([[inversion_count(a, b) for b in ORDERS] for a in ORDERS], dtype=np.int64)
    d.setflags(write=False)
    return d


#: 6x6 swap distance matrix in canonical order; read-only.
SWAP_DISTANCES = _inversion_matrix()
_D_INT = SWAP_DISTANCES.tolist()


def swap_distance(a: Order, b: Order) -> int:
    """Minimum number of adjacent swaps turning order ``a`` into order ``b``."""
    return _D_INT[a.index][b.index]


@dataclass(frozen=True)
class OrderDistribution:
    """Relative frequencies of the six orders in one language.

    Build it with :meth:`from_counts` for real data.  :meth:`from_probs` exists
    for tests and worked examples; such distributions carry no counts and
    their metrics are plain floating point.
    """

    probs: tuple[float, ...]
    counts: tuple[int, ...] | None = None

    def __post_init__(self):
        if len(self.probs) != 6:
            raise InvalidDistribution(f"expected 6 probabilities, got {len(self.probs)}")
        if self.counts is not None and len(self.counts) != 6:
            raise InvalidDistribution(f"expected 6 counts, got {len(self.counts)}")

    @classmethod
    def from_counts(cls, counts: Sequence[int] | Mapping[Order, int]) -> "OrderDistribution":
        if isinstance(counts, Mapping):
            counts = [counts.get(o, 0) for o in ORDERS]
        counts = tuple(int(c) for c in counts)
        if len(counts) != 6:
            raise InvalidDistribution(f"expected 6 counts, got {len(counts)}")
        if any(c < 0 for c in counts):
            raise InvalidDistribution(f"negative count in {counts}")
        total = sum(counts)
        if total == 0:
            raise InvalidDistribution("distribution with zero total count")
        return cls(tuple(c / total for c in counts), counts)

    @classmethod
    def from_probs(cls, probs: Sequence[float] | Mapping[Order, float]) -> "OrderDistribution":
        if isinstance(probs, Mapping):
            probs = [probs.get(o, 0.0) for o in ORDERS]
        probs = tuple(float(p) for p in probs)
        if len(probs) != 6:
            raise InvalidDistribution(f"expected 6 probabilities, got {len(probs)}")
        if any(not (0.0 <= p <= 1.0) for p in probs):
            raise InvalidDistribution(f"probability outside [0, 1] in {probs}")
        if abs(sum(probs) - 1.0) > PROB_SUM_TOL:
            raise InvalidDistribution(f"probabilities sum to {sum(probs)!r}, not 1")
        return cls(probs)

    @property
    def total(self) -> int | None:
        return None if self.counts is None else sum(self.counts)

    def prob(self, order: Order) -> float:
        return self.probs[order.index]

    def as_array(self) -> np.ndarray:
        return np.asarray(self.probs, dtype=np.float64)


def _exact_parts(counts):
    # returns (sum_ij d_ij c_i c_j, sum_i c_i^2, total^2) as ints
    cross = sum(_D_INT[i][j] * counts[i] * counts[j] for i in range(6) for j in range(6))
    sq = sum(c * c for c in counts)
    t = sum(counts)
    return cross, sq, t * t


def mean_swap_distance(dist: OrderDistribution) -> float:
    """Average swap distance between two orders drawn independently from ``dist``."""
    if dist.counts is not None:
        cross, _, t2 = _exact_parts(dist.counts)
        return cross / t2
    p = dist.as_array()
    return float(p @ SWAP_DISTANCES @ p)


def simpson_index(dist: OrderDistribution) -> float:
    """Probability that two independent draws give the same order (sum of p_i squared)."""
    if dist.counts is not None:
        _, sq, t2 = _exact_parts(dist.counts)
        return sq / t2
    p = dist.as_array()
    return float(p @ p)


def random_baseline(dist: OrderDistribution) -> float:
    """Expected mean swap distance when the six frequencies are shuffled over the vertices.

    Closed form ``(9/5) * (1 - S)`` with ``S`` the Simpson index.
    """
    if dist.counts is not None:
        _, sq, t2 = _exact_parts(dist.counts)
        return 9 * (t2 - sq) / (5 * t2)
    return 9.0 / 5.0 * (1.0 - simpson_index(dist))


def exact_baseline_gap(counts: Sequence[int]) -> Fraction:
    """``mean_swap_distance - random_baseline`` as an exact rational."""
    cross, sq, t2 = _exact_parts(tuple(counts))
    return Fraction(5 * cross - 9 * (t2 - sq), 5 * t2)


def baseline_gap(dist: OrderDistribution) -> float:
    """Signed difference between observed and shuffled mean swap distance.

    Negative values are what swap distance minimization predicts.  With
    counts the result is the correctly rounded exact difference, so it is
    exactly 0.0 whenever the two metrics coincide.
    """
    if dist.counts is not None:
        cross, sq, t2 = _exact_parts(dist.counts)
        return (5 * cross - 9 * (t2 - sq)) / (5 * t2)
    return mean_swap_distance(dist) - random_baseline(dist)


def enumerate_shuffles(dist: OrderDistribution) -> Iterator[OrderDistribution]:
    """Yield the 720 reassignments of the six frequencies to the six orders."""
    if dist.counts is not None:
        for perm in itertools.permutations(dist.counts):
            yield OrderDistribution.from_counts(perm)
    else:
        for perm in itertools.permutations(dist.probs):
            yield OrderDistribution(tuple(perm))


@dataclass(frozen=True)
class DominantOrderClass:
    """Either a dominant order or ``order=None`` for no dominant order (NDO)."""

    order: Order | None
    rho: float

    @property
    def is_ndo(self) -> bool:
        return self.order is None

    @property
    def label(self) -> str:
        return "NDO" if self.order is None else self.order.value

    @classmethod
    def parse(cls, label: str, rho: float = float("nan")) -> "DominantOrderClass":
        label = label.strip().upper()
        if label == "NDO":
            return cls(None, rho)
        return cls(Order.parse(label), rho)


def classify_dominant_order(dist: OrderDistribution, rho0: float = DEFAULT_RHO0) -> DominantOrderClass:
    """Dominant order by the ratio of the second to the first highest frequency.

    The language lacks a dominant order when that ratio reaches ``rho0``.
    An exact tie at the top gives ratio 1 and therefore always NDO.
    """
    if not (0.0 < rho0 <= 1.0):
        raise ValueError(f"rho0 must lie in (0, 1], got {rho0}")
    values = dist.counts if dist.counts is not None else dist.probs
    ranked = sorted(range(6), key=lambda i: values[i], reverse=True)
    first, second = values[ranked[0]], values[ranked[1]]
    if first <= 0:
        raise InvalidDistribution("distribution has no mass")
    rho = second / first
    if rho >= rho0:
        return DominantOrderClass(None, rho)
    return DominantOrderClass(ORDERS[ranked[0]], rho)
