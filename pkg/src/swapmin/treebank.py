"""CoNLL-U reading and extraction of nominal subject-object-verb triplets.

Only four columns matter for extraction: ID, UPOS, HEAD and DEPREL.  Subtype
suffixes on relations are kept verbatim by the parser; the rule sets below
decide which subtypes count.
"""

from __future__ import annotations

import enum
import gzip
import io
import logging
import os
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterable, Iterator, Sequence

from .errors import ConlluError, CountsTableError
from .permutohedron import ORDERS, Order

log = logging.getLogger(__name__)

N_COLUMNS = 10


class AnnotationStyle(enum.Enum):
    UD = "ud"
    SUD = "sud"


class DependentPolicy(enum.Enum):
    """How to pair several subjects/objects attached to the same verb."""

    ALL_PAIRS = "all-pairs"
    NEAREST = "nearest"


@dataclass(frozen=True, slots=True)
class Token:
    id: int
    form: str
    upos: str
    head: int
    deprel: str


@dataclass
class Sentence:
    tokens: list[Token]
    comments: list[str] = field(default_factory=list)

    def __len__(self):
        return len(self.tokens)

    @property
    def sent_id(self) -> str | None:
        for c in self.comments:
            key, _, value = c.lstrip("#").partition("=")
            if key.strip() == "sent_id":
                return value.strip()
        return None


def _lines(stream) -> Iterator[str]:
    for raw in stream:
        if isinstance(raw, bytes):
            raw = raw.decode("utf-8")
        yield raw.rstrip("\r\n")


def _check_sentence(tokens: list[Token], source: str, start_line: int):
    for expected, tok in enumerate(tokens, start=1):
        if tok.id != expected:
            raise ConlluError(f"token ids not consecutive from 1 (got {tok.id}, expected {expected})", source, start_line)
    n = len(tokens)
    for tok in tokens:
        if tok.head == tok.id or not (0 <= tok.head <= n):
            raise ConlluError(f"token {tok.id} has invalid head {tok.head}", source, start_line)


def parse_conllu(stream: Iterable[str | bytes], source: str = "<stream>", strict: bool = True) -> Iterator[Sentence]:
    """Yield the sentences of a CoNLL-U stream in file order.

    Multiword-token ranges (``3-4``) and empty nodes (``3.1``) are skipped.
    A malformed line raises :class:`ConlluError` in strict mode; in lenient
    mode the enclosing sentence is dropped with a warning.
    """
    tokens: list[Token] = []
    comments: list[str] = []
    bad: ConlluError | None = None
    start = 1

    def flush():
        nonlocal tokens, comments, bad
        out = None
        if tokens and bad is None:
            try:
                _check_sentence(tokens, source, start)
                out = Sentence(tokens, comments)
            except ConlluError as exc:
                if strict:
                    raise
                log.warning("skipping sentence: %s", exc)
        elif bad is not None:
            log.warning("skipping sentence: %s", bad)
        tokens, comments, bad = [], [], None
        return out

    lineno = 0
    for lineno, line in enumerate(_lines(stream), start=1):
        if not line.strip():
            sent = flush()
            if sent is not None:
                yield sent
            start = lineno + 1
            continue
        if line.startswith("#"):
            comments.append(line)
            continue
        if bad is not None:
            continue
        cols = line.split("\t")
        try:
            if len(cols) != N_COLUMNS:
                raise ConlluError(f"expected {N_COLUMNS} tab-separated columns, got {len(cols)}", source, lineno)
            tid = cols[0]
            if "-" in tid or "." in tid:
                continue
            try:
                token = Token(int(tid), cols[1], cols[3], int(cols[6]), cols[7])
            except ValueError:
                raise ConlluError(f"unparsable id/head {cols[0]!r}/{cols[6]!r}", source, lineno) from None
        except ConlluError as exc:
            if strict:
                raise
            bad = exc
            continue
        tokens.append(token)
    sent = flush()
    if sent is not None:
        yield sent


def open_conllu(path: str | os.PathLike) -> IO[str]:
    path = Path(path)
    if path.suffix == ".gz":
        return io.TextIOWrapper(gzip.open(path, "rb"), encoding="utf-8")
    return open(path, encoding="utf-8")


def read_conllu(path: str | os.PathLike, strict: bool = True) -> Iterator[Sentence]:
    with open_conllu(path) as fh:
        yield from parse_conllu(fh, source=str(path), strict=strict)


# --- triplet rules -------------------------------------------------------------

_UD_NOMINAL = frozenset({"NOUN", "PRON", "PROPN"})
_SUD_NOMINAL = frozenset({"NOUN", "PRON", "PROPN", "ADP"})


def _is_rel(deprel: str, base: str, sep: str) -> bool:
    return deprel == base or deprel.startswith(base + sep)


@dataclass(frozen=True)
class _Rules:
    heads: frozenset
    dependents: frozenset
    subject: tuple[str, ...]
    object: tuple[str, ...]
    sep: str
    excluded_object_upos: frozenset = frozenset()

    def is_subject(self, tok: Token) -> bool:
        return tok.upos in self.dependents and any(_is_rel(tok.deprel, b, self.sep) for b in self.subject)

    def is_object(self, tok: Token) -> bool:
        return (
            tok.upos in self.dependents
            and tok.upos not in self.excluded_object_upos
            and any(_is_rel(tok.deprel, b, self.sep) for b in self.object)
        )


RULES = {
    AnnotationStyle.UD: _Rules(
        heads=frozenset({"VERB"}),
        dependents=_UD_NOMINAL,
        subject=("nsubj", "obl:subj"),
        object=("obj", "obl:obj"),
        sep=":",
    ),
    AnnotationStyle.SUD: _Rules(
        heads=frozenset({"AUX", "VERB"}),
        dependents=_SUD_NOMINAL,
        subject=("subj", "udep@subj"),
        object=("comp:obj", "udep@obj"),
        sep="@",
        excluded_object_upos=frozenset({"SCONJ"}),
    ),
}


def _nearest(candidates: list[Token], verb_id: int) -> Token:
    return min(candidates, key=lambda t: (abs(t.id - verb_id), t.id))


def extract_triplets(
    sentence: Sentence,
    style: AnnotationStyle,
    policy: DependentPolicy = DependentPolicy.ALL_PAIRS,
) -> list[tuple[int, int, int]]:
    """Return ``(subject_id, object_id, verb_id)`` for every matching verb.

    With ``ALL_PAIRS`` a verb with several matching subjects or objects
    yields one triplet per pair; ``NEAREST`` keeps only the subject and the
    object closest to the verb (ties to the leftmost).
    """
    rules = RULES[AnnotationStyle(style)]
    policy = DependentPolicy(policy)
    subjects: dict[int, list[Token]] = {}
    objects: dict[int, list[Token]] = {}
    for tok in sentence.tokens:
        if tok.head == 0:
            continue
        if rules.is_subject(tok):
            subjects.setdefault(tok.head, []).append(tok)
        elif rules.is_object(tok):
            objects.setdefault(tok.head, []).append(tok)

    out = []
    for verb_id in sorted(subjects.keys() & objects.keys()):
        if sentence.tokens[verb_id - 1].upos not in rules.heads:
            continue
        subj, obj = subjects[verb_id], objects[verb_id]
        if policy is DependentPolicy.NEAREST:
            subj, obj = [_nearest(subj, verb_id)], [_nearest(obj, verb_id)]
        for s in subj:
            for o in obj:
                out.append((s.id, o.id, verb_id))
    return out


def triplet_order(subject_id: int, object_id: int, verb_id: int) -> Order:
    """Linear order of the three tokens, read off their positions."""
    placed = sorted([(subject_id, "S"), (object_id, "O"), (verb_id, "V")])
    return Order("".join(sym for _, sym in placed))


# --- counting ------------------------------------------------------------------


@dataclass
class TripletCounts:
    language: str
    counts: Counter = field(default_factory=Counter)

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    def as_tuple(self) -> tuple[int, ...]:
        return tuple(self.counts.get(o, 0) for o in ORDERS)

    def __add__(self, other: "TripletCounts") -> "TripletCounts":
        if other.language != self.language:
            raise ValueError(f"cannot merge counts of {self.language!r} and {other.language!r}")
        return TripletCounts(self.language, self.counts + other.counts)

    def __eq__(self, other):
        if not isinstance(other, TripletCounts):
            return NotImplemented
        return self.language == other.language and self.as_tuple() == other.as_tuple()


def count_orders(
    sentences: Iterable[Sentence],
    style: AnnotationStyle,
    language: str,
    policy: DependentPolicy = DependentPolicy.ALL_PAIRS,
) -> TripletCounts:
    counts = Counter()
    for sent in sentences:
        for s, o, v in extract_triplets(sent, style, policy):
            counts[triplet_order(s, o, v)] += 1
    return TripletCounts(language, counts)


def count_file(path, style, language, policy=DependentPolicy.ALL_PAIRS, strict=True) -> TripletCounts:
    return count_orders(read_conllu(path, strict=strict), style, language, policy)


# --- counts TSV ----------------------------------------------------------------

COUNTS_HEADER = ("language", "order", "count")


def ingest_counts_table(stream: Iterable[str | bytes], source: str = "<counts>") -> list[TripletCounts]:
    """Read a ``language<TAB>order<TAB>count`` table; missing orders count as zero."""
    lines = _lines(stream)
    header = next(lines, None)
    if header is None:
        raise CountsTableError(f"{source}: empty file, expected header {COUNTS_HEADER}")
    if tuple(h.strip() for h in header.split("\t")) != COUNTS_HEADER:
        raise CountsTableError(f"{source}:1: bad header {header!r}")
    by_lang: dict[str, TripletCounts] = {}
    seen = set()
    for lineno, line in enumerate(lines, start=2):
        if not line.strip():
            continue
        cols = line.split("\t")
        if len(cols) != 3:
            raise CountsTableError(f"{source}:{lineno}: expected 3 columns, got {len(cols)}")
        lang, label, raw = (c.strip() for c in cols)
        try:
            order = Order.parse(label)
        except ValueError:
            raise CountsTableError(f"{source}:{lineno}: unknown order {label!r}") from None
        try:
            count = int(raw)
        except ValueError:
            raise CountsTableError(f"{source}:{lineno}: count {raw!r} is not an integer") from None
        if count < 0:
            raise CountsTableError(f"{source}:{lineno}: negative count {count}")
        if (lang, order) in seen:
            raise CountsTableError(f"{source}:{lineno}: duplicate row for ({lang}, {order})")
        seen.add((lang, order))
        rec = by_lang.setdefault(lang, TripletCounts(lang))
        rec.counts[order] += count
    return list(by_lang.values())


def format_counts_table(records: Sequence[TripletCounts]) -> str:
    """Serialize counts with all six rows per language, languages sorted."""
    out = ["\t".join(COUNTS_HEADER)]
    for rec in sorted(records, key=lambda r: r.language):
        for order in ORDERS:
            out.append(f"{rec.language}\t{order.value}\t{rec.counts.get(order, 0)}")
    return "\n".join(out) + "\n"
