"""End-to-end steps behind the command-line subcommands.

Every step reads and writes flat files (TSV, CSV, JSON) so runs can be
inspected and resumed.  The per-language metrics CSV is the hand-off between
``measure`` and the statistical steps; those steps recompute the metrics from
the six count columns rather than trusting rounded floats.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable

from . import __version__
from .errors import DataError, UnresolvedLanguage
from .permutohedron import ORDERS, DominantOrderClass, OrderDistribution
from .stats import (
    FamilyTestReport,
    StratifiedCI,
    adjust_sd_minp,
    bonferroni,
    stratified_ci,
    test_each_family,
)
from .taxonomy import (
    DEFAULT_PSEUDOFAMILIES,
    LanguageRecord,
    Languoid,
    group_by_family,
    load_aliases,
    load_taxonomy,
    macroarea_label,
    partition_duplicates,
    resolve_language,
    typical_macroarea,
)
from .treebank import (
    AnnotationStyle,
    DependentPolicy,
    TripletCounts,
    count_file,
    format_counts_table,
    ingest_counts_table,
)

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
CONLLU_SUFFIXES = (".conllu", ".conllu.gz")


@dataclass
class PipelineConfig:
    """All tunable settings; the defaults are the published analysis settings."""

    style: str = "ud"
    taxonomy: str | None = None
    aliases: str | None = None
    dominant_orders: str | None = None
    taxonomy_columns: dict[str, str] = field(default_factory=dict)
    pseudofamilies: list[str] = field(default_factory=lambda: sorted(DEFAULT_PSEUDOFAMILIES))
    rho0: float = 0.5
    n_resamples: int = 100_000
    n_samples: int = 1_000_000
    confidence: float = 0.99
    seed: int = 0
    strict: bool = True
    dep_policy: str = "all-pairs"
    zero_method: str = "wilcox"
    workers: int = 1

    def __post_init__(self):
        AnnotationStyle(self.style)
        DependentPolicy(self.dep_policy)
        if not 0 < self.rho0 <= 1:
            raise ValueError(f"rho0 must lie in (0, 1], got {self.rho0}")
        if not 0 < self.confidence < 1:
            raise ValueError(f"confidence must lie in (0, 1), got {self.confidence}")
        if self.zero_method not in ("wilcox", "pratt"):
            raise ValueError(f"unknown zero_method {self.zero_method!r}")

    @classmethod
    def from_file(cls, path, **overrides) -> "PipelineConfig":
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config key(s): {', '.join(sorted(unknown))}")
        data.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**data)

    def as_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)


# --- extract ---------------------------------------------------------------------


def language_of(path: Path) -> str:
    """Treebank language code from a UD/SUD file name such as ``cy_ccg-ud-test.conllu``."""
    return path.name.split("_", 1)[0]


def find_treebank_files(root) -> dict[str, list[Path]]:
    root = Path(root)
    if not root.is_dir():
        raise DataError(f"not a directory: {root}")
    files = sorted(p for p in root.rglob("*") if p.is_file() and p.name.endswith(CONLLU_SUFFIXES))
    if not files:
        raise DataError(f"no files matched under {root}")
    by_lang: dict[str, list[Path]] = {}
    for p in files:
        by_lang.setdefault(language_of(p), []).append(p)
    return by_lang


def _count_job(args):
    path, style, language, policy, strict = args
    return count_file(path, AnnotationStyle(style), language, DependentPolicy(policy), strict)


def extract(root, config: PipelineConfig) -> tuple[list[TripletCounts], list[dict]]:
    """Merge all treebanks per language and count triplet orders.

    Returns the non-empty languages and an exclusion list for the rest.
    """
    by_lang = find_treebank_files(root)
    jobs = [(p, config.style, lang, config.dep_policy, config.strict) for lang, paths in sorted(by_lang.items()) for p in paths]
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            parts = list(pool.map(_count_job, jobs))
    else:
        parts = [_count_job(j) for j in jobs]
    merged: dict[str, TripletCounts] = {}
    for part in parts:
        merged[part.language] = merged[part.language] + part if part.language in merged else part
    kept, excluded = [], []
    for lang in sorted(merged):
        if merged[lang].total == 0:
            log.info("language %s has no matching triplets; omitted", lang)
            excluded.append({"id": lang, "reason": "no subject-object-verb triplets"})
        else:
            kept.append(merged[lang])
    return kept, excluded


# --- measure ---------------------------------------------------------------------


METRIC_COLUMNS = (
    ["language", "glottocode", "name", "family", "macroareas", "total"]
    + [o.value for o in ORDERS]
    + ["mean_distance", "baseline", "simpson", "delta", "dominant", "rho"]
)


def read_dominant_orders(path) -> dict[str, DominantOrderClass]:
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\r\n")
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise DataError(f"{path}:{lineno}: expected language<TAB>dominant")
            if lineno == 1 and parts[0] == "language":
                continue
            try:
                out[parts[0].strip()] = DominantOrderClass.parse(parts[1])
            except ValueError as exc:
                raise DataError(f"{path}:{lineno}: {exc}") from None
    return out


def measure(counts: Iterable[TripletCounts], config: PipelineConfig) -> tuple[list[LanguageRecord], list[dict]]:
    """Join counts with the taxonomy and build one record per retained language."""
    if not config.taxonomy:
        raise DataError("measure needs a taxonomy file")
    aliases = {}
    if config.aliases:
        with open(config.aliases, encoding="utf-8") as fh:
            aliases = load_aliases(fh)
    with open(config.taxonomy, encoding="utf-8", newline="") as fh:
        table = load_taxonomy(fh, config.taxonomy_columns, config.pseudofamilies, aliases)
    overrides = read_dominant_orders(config.dominant_orders) if config.dominant_orders else {}

    excluded = []
    resolved: list[tuple[str, Languoid]] = []
    by_id = {}
    for rec in sorted(counts, key=lambda r: r.language):
        if rec.total == 0:
            excluded.append({"id": rec.language, "reason": "no subject-object-verb triplets"})
            continue
        try:
            lg = resolve_language(rec.language, table)
        except UnresolvedLanguage:
            excluded.append({"id": rec.language, "reason": "unresolved language id"})
            continue
        if lg.excluded:
            excluded.append({"id": rec.language, "reason": f"pseudofamily ({lg.family})"})
            continue
        resolved.append((rec.language, lg))
        by_id[rec.language] = rec

    kept, removed = partition_duplicates(resolved)
    for r in removed:
        excluded.append({"id": r.sample, "reason": f"redundant sample of language {r.language} (kept {r.kept})"})
    for e in excluded:
        log.info("excluded %s: %s", e["id"], e["reason"])

    records = []
    for sample, lg in kept:
        override = overrides.get(sample) or overrides.get(lg.glottocode)
        records.append(
            LanguageRecord(
                language=sample,
                distribution=OrderDistribution.from_counts(by_id[sample].counts),
                languoid=lg,
                dominant_override=override,
                rho0=config.rho0,
            )
        )
    records.sort(key=lambda r: (r.family, r.language))
    return records, sorted(excluded, key=lambda e: e["id"])


def metrics_row(rec: LanguageRecord) -> dict[str, Any]:
    lg = rec.languoid
    dom = rec.dominant
    row = {
        "language": rec.language,
        "glottocode": lg.glottocode if lg else "",
        "name": lg.name if lg else rec.language,
        "family": rec.family,
        "macroareas": ";".join(sorted(rec.macroareas)),
        "total": rec.distribution.total,
    }
    row.update({o.value: c for o, c in zip(ORDERS, rec.distribution.counts)})
    row.update(
        {
            "mean_distance": rec.mean_distance,
            "baseline": rec.baseline,
            "simpson": rec.simpson,
            "delta": rec.delta,
            "dominant": dom.label,
            "rho": dom.rho,
        }
    )
    return row


def read_metrics(path, rho0: float = 0.5) -> list[LanguageRecord]:
    """Rebuild language records from a metrics CSV written by :func:`write_csv`."""
    records = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        missing = [c for c in METRIC_COLUMNS if c not in (reader.fieldnames or [])]
        if missing:
            raise DataError(f"{path}: missing metrics column(s) {', '.join(missing)}")
        for row in reader:
            try:
                counts = [int(row[o.value]) for o in ORDERS]
                dist = OrderDistribution.from_counts(counts)
                dominant = DominantOrderClass.parse(row["dominant"])
            except ValueError as exc:
                raise DataError(f"{path}: bad row for {row.get('language')!r}: {exc}") from None
            areas = frozenset(a for a in row["macroareas"].split(";") if a)
            lg = Languoid(row["glottocode"] or row["language"], row["name"], row["family"], areas)
            records.append(LanguageRecord(row["language"], dist, lg, dominant, rho0))
    return records


# --- statistics -----------------------------------------------------------------


def test_families(records: list[LanguageRecord], config: PipelineConfig) -> tuple[list[FamilyTestReport], list[str]]:
    groups = group_by_family(records)
    _, untestable = test_each_family(groups, config.zero_method)
    reports = adjust_sd_minp(groups, config.n_resamples, config.seed, config.zero_method, config.workers)
    return reports, untestable


test_families.__test__ = False


def family_rows(reports: list[FamilyTestReport]) -> list[dict[str, Any]]:
    bonf = bonferroni([r.raw_p for r in reports])
    rows = []
    for r, b in zip(reports, bonf):
        row = dataclasses.asdict(r)
        row["bonferroni_p"] = b
        rows.append(row)
    return rows


def select_subset(records: list[LanguageRecord], subset: str) -> list[LanguageRecord]:
    if subset == "all":
        chosen = records
    elif subset == "ndo":
        chosen = [r for r in records if r.dominant.is_ndo]
    else:
        raise ValueError(f"unknown subset {subset!r}")
    if not chosen:
        raise DataError(f"subset {subset!r} is empty: no language passes the filter")
    return chosen


def stratified(records: list[LanguageRecord], config: PipelineConfig, subset: str = "all") -> StratifiedCI:
    chosen = select_subset(records, subset)
    groups = group_by_family(chosen)
    if len(groups) < 2:
        raise DataError(f"subset {subset!r} covers {len(groups)} family; stratified sampling needs at least 2")
    return stratified_ci(groups, config.n_samples, config.confidence, config.seed, config.zero_method, config.workers)


# --- report ---------------------------------------------------------------------


SCATTER_COLUMNS = ["language", "name", "family", "macroarea", "dominant", "baseline", "mean_distance", "below_control"]
FAMILY_COLUMNS = [
    "family", "n_languages", "n_below_control", "typical_macroarea",
    "typical_macroarea_pct", "macroarea_tie", "raw_p", "adjusted_p",
]


def scatter_rows(records: list[LanguageRecord]) -> list[dict[str, Any]]:
    rows = []
    for rec in records:
        rows.append(
            {
                "language": rec.language,
                "name": rec.languoid.name if rec.languoid else rec.language,
                "family": rec.family,
                "macroarea": macroarea_label(rec.macroareas),
                "dominant": rec.dominant.label,
                "baseline": rec.baseline,
                "mean_distance": rec.mean_distance,
                "below_control": rec.mean_distance < rec.baseline,
            }
        )
    return rows


def family_summary_rows(records: list[LanguageRecord], reports: Iterable[FamilyTestReport] = ()) -> list[dict[str, Any]]:
    by_family = {r.family: r for r in reports}
    rows = []
    for g in group_by_family(records):
        if all(m.macroareas for m in g.members):
            typ = typical_macroarea(g)
            area, pct, tied = typ.macroarea, 100.0 * typ.rho, typ.tied
        else:
            area, pct, tied = "", float("nan"), False
        rep = by_family.get(g.family)
        rows.append(
            {
                "family": g.family,
                "n_languages": len(g),
                "n_below_control": sum(m.mean_distance < m.baseline for m in g.members),
                "typical_macroarea": area,
                "typical_macroarea_pct": pct,
                "macroarea_tie": tied,
                "raw_p": rep.raw_p if rep else "",
                "adjusted_p": rep.adjusted_p if rep else "",
            }
        )
    return rows


def read_family_reports(path) -> list[FamilyTestReport]:
    names = [f.name for f in dataclasses.fields(FamilyTestReport)]
    out = []
    with open(path, encoding="utf-8", newline="") as fh:
        for row in csv.DictReader(fh):
            vals = {}
            for f in dataclasses.fields(FamilyTestReport):
                raw = row[f.name]
                vals[f.name] = raw if f.type in ("str", str) else (int(raw) if f.type in ("int", int) else float(raw))
            out.append(FamilyTestReport(**{k: vals[k] for k in names}))
    return out


# --- file helpers -----------------------------------------------------------------


def _fmt(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return value


def write_csv(path, rows: list[dict[str, Any]], columns: list[str] | None = None):
    columns = columns or (list(rows[0]) if rows else [])
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: _fmt(row[k]) for k in columns})
    _write_text(path, buf.getvalue())


def write_json(path, payload: dict[str, Any]):
    doc = {"schema_version": SCHEMA_VERSION, "swapmin_version": __version__}
    doc.update(payload)
    _write_text(path, json.dumps(doc, indent=2, sort_keys=True, allow_nan=True) + "\n")


def write_counts(path, records: list[TripletCounts]):
    _write_text(path, format_counts_table(records))


def read_counts(path) -> list[TripletCounts]:
    with open(path, encoding="utf-8") as fh:
        return ingest_counts_table(fh, source=str(path))


def _write_text(path, text: str):
    if path is None or str(path) == "-":
        sys.stdout.write(text)
        return
    path = Path(path)
    if path.parent and not path.parent.exists():
        os.makedirs(path.parent, exist_ok=True)
    path.write_text(text, encoding="utf-8")
