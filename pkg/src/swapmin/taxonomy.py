"""Genealogical and areal metadata for the languages in a sample.

The languoid table is a CSV export of a Glottolog-style classification.
Families are stored by name; a language with no family (an isolate, or a
family root) becomes a family of its own.  Pseudofamilies such as sign
languages, pidgins and artificial languages are kept in the table but
flagged so the pipeline can drop them.
"""

from __future__ import annotations

import csv
import io
import logging
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, NamedTuple, Sequence

from .errors import TaxonomyError, UnresolvedLanguage
from .permutohedron import (
    DominantOrderClass,
    OrderDistribution,
    baseline_gap,
    classify_dominant_order,
    mean_swap_distance,
    random_baseline,
    simpson_index,
)

log = logging.getLogger(__name__)

KINDS = ("language", "dialect", "macrolanguage", "pseudo", "family")
KIND_PRIORITY = {"language": 0, "dialect": 1, "macrolanguage": 2}
DEFAULT_PSEUDOFAMILIES = frozenset({"Sign Language", "Pidgin", "Artificial Language"})

DEFAULT_COLUMNS = {
    "glottocode": "glottocode",
    "name": "name",
    "family": "family",
    "macroareas": "macroareas",
    "kind": "kind",
    "language": "language",
}
REQUIRED = ("glottocode", "name", "family", "macroareas")


@dataclass(frozen=True)
class Languoid:
    glottocode: str
    name: str
    family: str
    macroareas: frozenset[str]
    kind: str = "language"
    # language-level glottocode this entry belongs to; itself for languages
    language: str = ""

    @property
    def excluded(self) -> bool:
        return self.kind == "pseudo"

    @property
    def language_id(self) -> str:
        return self.language or self.glottocode


class TaxonomyTable(dict):
    """``glottocode -> Languoid`` with a name index and optional aliases."""

    def __init__(self, rows: Iterable[Languoid] = (), aliases: Mapping[str, str] | None = None):
        super().__init__()
        for row in rows:
            if row.glottocode in self:
                raise TaxonomyError(f"duplicate glottocode {row.glottocode!r}")
            self[row.glottocode] = row
        self.aliases = dict(aliases or {})
        self._by_name = defaultdict(list)
        for row in self.values():
            self._by_name[row.name.casefold()].append(row)

    def by_name(self, name: str) -> list[Languoid]:
        return self._by_name.get(name.casefold(), [])


def _split_areas(raw: str) -> frozenset[str]:
    return frozenset(a.strip() for a in raw.replace(",", ";").split(";") if a.strip())


def load_taxonomy(
    stream,
    columns: Mapping[str, str] | None = None,
    pseudofamilies: Iterable[str] = DEFAULT_PSEUDOFAMILIES,
    aliases: Mapping[str, str] | None = None,
) -> TaxonomyTable:
    """Read a languoid CSV into a :class:`TaxonomyTable`.

    ``columns`` maps the logical field names (glottocode, name, family,
    macroareas, kind, language) to CSV headers.  Family values that are
    themselves glottocodes in the table are replaced by that languoid's name.
    Rows whose family is listed in ``pseudofamilies`` get kind ``pseudo``.
    """
    if isinstance(stream, (bytes, bytearray)):
        stream = io.StringIO(stream.decode("utf-8"))
    cols = dict(DEFAULT_COLUMNS)
    cols.update(columns or {})
    pseudo = {p.casefold() for p in pseudofamilies}
    reader = csv.DictReader(stream)
    if reader.fieldnames is None:
        return TaxonomyTable(aliases=aliases)
    missing = [k for k in REQUIRED if cols[k] not in reader.fieldnames]
    if missing:
        raise TaxonomyError(f"missing required column(s): {', '.join(cols[k] for k in missing)}")

    raw = []
    for row in reader:
        get = lambda key: (row.get(cols[key]) or "").strip()
        kind = get("kind").lower() if cols["kind"] in reader.fieldnames else ""
        raw.append((get("glottocode"), get("name"), get("family"), _split_areas(get("macroareas")), kind or "language", get("language")))

    codes = {r[0]: r[1] for r in raw}
    rows = []
    for code, name, family, areas, kind, language in raw:
        if kind not in KINDS:
            raise TaxonomyError(f"{code}: unknown kind {kind!r}")
        if family in codes:
            family = codes[family]
        if not family:
            family = name
        if family.casefold() in pseudo:
            kind = "pseudo"
        rows.append(Languoid(code, name, family, areas, kind, language))
    return TaxonomyTable(rows, aliases)


def load_aliases(stream) -> dict[str, str]:
    """Read ``local_id<TAB>glottocode`` lines (an optional header is skipped)."""
    out = {}
    for lineno, line in enumerate(stream, start=1):
        if isinstance(line, bytes):
            line = line.decode("utf-8")
        line = line.rstrip("\r\n")
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise TaxonomyError(f"alias line {lineno}: expected 2 columns")
        if lineno == 1 and parts[0].strip() == "local_id":
            continue
        out[parts[0].strip()] = parts[1].strip()
    return out


def resolve_language(language_id: str, table: TaxonomyTable) -> Languoid:
    """Find a languoid by alias, glottocode or (unique) name, in that order."""
    code = table.aliases.get(language_id, language_id)
    if code in table:
        return table[code]
    hits = table.by_name(language_id)
    if len(hits) == 1:
        return hits[0]
    raise UnresolvedLanguage(language_id)


class _Removed(NamedTuple):
    sample: str
    kept: str
    language: str


def partition_duplicates(records: Sequence[tuple[str, Languoid]]) -> tuple[list[tuple[str, Languoid]], list[_Removed]]:
    """Split samples into one keeper per language and the redundant rest.

    Priority is language > dialect > macrolanguage, then the
    lexicographically smallest sample id.  Kept samples stay in input order.
    """
    groups: dict[str, list[tuple[str, Languoid]]] = defaultdict(list)
    for sample, lang in records:
        groups[lang.language_id].append((sample, lang))
    keep = {}
    removed = []
    for language, members in groups.items():
        best = min(members, key=lambda m: (KIND_PRIORITY.get(m[1].kind, len(KIND_PRIORITY)), m[0]))
        keep[language] = best[0]
        for sample, _ in members:
            if sample != best[0]:
                removed.append(_Removed(sample, best[0], language))
    kept = [(s, l) for s, l in records if keep[l.language_id] == s]
    return kept, sorted(removed)


def dedup_samples(records: Sequence[tuple[str, Languoid]]) -> list[tuple[str, Languoid]]:
    kept, removed = partition_duplicates(records)
    for r in removed:
        log.info("dropping redundant sample %s (language %s, kept %s)", r.sample, r.language, r.kept)
    return kept


@dataclass
class LanguageRecord:
    """One language of a sample with its order distribution and derived metrics."""

    language: str
    distribution: OrderDistribution
    languoid: Languoid | None = None
    dominant_override: DominantOrderClass | None = None
    rho0: float = 0.5

    @property
    def family(self) -> str:
        return self.languoid.family if self.languoid else self.language

    @property
    def macroareas(self) -> frozenset[str]:
        return self.languoid.macroareas if self.languoid else frozenset()

    @property
    def mean_distance(self) -> float:
        return mean_swap_distance(self.distribution)

    @property
    def baseline(self) -> float:
        return random_baseline(self.distribution)

    @property
    def simpson(self) -> float:
        return simpson_index(self.distribution)

    @property
    def delta(self) -> float:
        return baseline_gap(self.distribution)

    @property
    def dominant(self) -> DominantOrderClass:
        computed = classify_dominant_order(self.distribution, self.rho0)
        if self.dominant_override is not None:
            return DominantOrderClass(self.dominant_override.order, computed.rho)
        return computed


@dataclass
class FamilyGroup:
    family: str
    members: list = field(default_factory=list)

    def __len__(self):
        return len(self.members)

    def deltas(self) -> list[float]:
        return [m.delta for m in self.members]


def group_by_family(records: Iterable[LanguageRecord]) -> list[FamilyGroup]:
    groups: dict[str, FamilyGroup] = {}
    for rec in records:
        groups.setdefault(rec.family, FamilyGroup(rec.family)).members.append(rec)
    return sorted(groups.values(), key=lambda g: g.family)


class TypicalMacroarea(NamedTuple):
    macroarea: str
    rho: float
    tied: bool


def macroarea_weights(area_sets: Sequence[Iterable[str]]) -> dict[str, Fraction]:
    """Share of each macroarea, each member splitting weight 1/N over its areas."""
    area_sets = [frozenset(a) for a in area_sets]
    if not area_sets:
        raise ValueError("family has no members")
    n = len(area_sets)
    weights: dict[str, Fraction] = defaultdict(Fraction)
    for areas in area_sets:
        if not areas:
            raise TaxonomyError("member with empty macroarea set")
        for a in areas:
            weights[a] += Fraction(1, n * len(areas))
    return dict(weights)


def typical_macroarea(family: FamilyGroup | Sequence[Iterable[str]]) -> TypicalMacroarea:
    """Macroarea with the largest weighted share of the family's languages.

    Ties are broken by macroarea name and reported through ``tied``.
    """
    if isinstance(family, FamilyGroup):
        family = [m.macroareas for m in family.members]
    weights = macroarea_weights(family)
    top = max(weights.values())
    best = sorted(a for a, w in weights.items() if w == top)
    if len(best) > 1:
        log.info("macroarea tie between %s", ", ".join(best))
    return TypicalMacroarea(best[0], float(top), len(best) > 1)


def macroarea_label(areas: Iterable[str]) -> str:
    """Hyphenated label for languages spoken in several macroareas."""
    return " - ".join(sorted(areas))
