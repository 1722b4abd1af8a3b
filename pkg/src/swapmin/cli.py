"""Command-line entry point: ``swapmin <subcommand> ...``.

Exit codes: 0 on success, 1 on usage errors, 2 on data errors.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
from pathlib import Path

from . import pipeline
from .errors import DataError
from .pipeline import PipelineConfig
from .stats import alpha_sweep

log = logging.getLogger("swapmin")

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="JSON file with PipelineConfig keys")
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("-v", "--verbose", action="count", default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="swapmin", description="Swap distance minimization in subject/object/verb order.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("extract", help="count S/O/V triplet orders in CoNLL-U treebanks")
    p.add_argument("treebanks", help="directory searched recursively for *.conllu[.gz]")
    p.add_argument("-o", "--output", default="-", help="counts TSV (default: stdout)")
    p.add_argument("--style", choices=["ud", "sud"])
    strict = p.add_mutually_exclusive_group()
    strict.add_argument("--strict", dest="strict", action="store_true", default=None)
    strict.add_argument("--lenient", dest="strict", action="store_false")
    p.add_argument("--dep-policy", choices=["all-pairs", "nearest"])
    p.add_argument("--exclusions", help="write the list of omitted languages as JSON")
    _common(p)

    p = sub.add_parser("measure", help="per-language metrics from a counts TSV")
    p.add_argument("counts", help="counts TSV (language, order, count)")
    p.add_argument("--taxonomy", help="languoid CSV")
    p.add_argument("--aliases", help="TSV local_id -> glottocode")
    p.add_argument("--dominant-orders", help="TSV language -> order label or NDO, overriding the ratio rule")
    p.add_argument("--rho0", type=float)
    p.add_argument("-o", "--output", default="-", help="metrics CSV (default: stdout)")
    p.add_argument("--json", help="also write the metrics as JSON")
    p.add_argument("--exclusions", help="write excluded samples as JSON")
    _common(p)

    p = sub.add_parser("test-families", help="per-family signed-rank tests with step-down minP adjustment")
    p.add_argument("metrics", help="metrics CSV from 'measure'")
    p.add_argument("--n-resamples", type=int)
    p.add_argument("--zero-method", choices=["wilcox", "pratt"])
    p.add_argument("-o", "--output", default="-", help="family test CSV (default: stdout)")
    p.add_argument("--alpha-sweep", help="backward-cumulative alpha table CSV")
    p.add_argument("--json", help="also write the reports as JSON")
    _common(p)

    p = sub.add_parser("stratified", help="confidence interval of the p-value under one-language-per-family sampling")
    p.add_argument("metrics", help="metrics CSV from 'measure'")
    p.add_argument("--subset", choices=["all", "ndo"], default="all")
    p.add_argument("--n-samples", type=int)
    p.add_argument("--confidence", type=float)
    p.add_argument("--zero-method", choices=["wilcox", "pratt"])
    p.add_argument("-o", "--output", default="-", help="CI as JSON (default: stdout)")
    _common(p)

    p = sub.add_parser("report", help="figure-ready tables")
    p.add_argument("metrics", help="metrics CSV from 'measure'")
    p.add_argument("--family-tests", help="CSV from 'test-families' to join into the family summary")
    p.add_argument("--outdir", required=True)
    _common(p)
    return parser


_CONFIG_FLAGS = {
    "style", "taxonomy", "aliases", "dominant_orders", "rho0", "n_resamples", "n_samples",
    "confidence", "seed", "strict", "dep_policy", "zero_method", "workers",
}


def make_config(args) -> PipelineConfig:
    overrides = {k: getattr(args, k) for k in _CONFIG_FLAGS if getattr(args, k, None) is not None}
    try:
        if args.config:
            return PipelineConfig.from_file(args.config, **overrides)
        return PipelineConfig(**overrides)
    except (ValueError, TypeError) as exc:
        raise UsageError(str(exc)) from None
    except OSError as exc:
        raise UsageError(f"cannot read config: {exc}") from None


def cmd_extract(args, config):
    records, excluded = pipeline.extract(args.treebanks, config)
    pipeline.write_counts(args.output, records)
    if args.exclusions:
        pipeline.write_json(args.exclusions, {"excluded": excluded})
    log.info("extracted %d languages (%d omitted)", len(records), len(excluded))


def cmd_measure(args, config):
    records, excluded = pipeline.measure(pipeline.read_counts(args.counts), config)
    rows = [pipeline.metrics_row(r) for r in records]
    pipeline.write_csv(args.output, rows, pipeline.METRIC_COLUMNS)
    if args.json:
        pipeline.write_json(args.json, {"config": config.as_dict(), "languages": rows, "excluded": excluded})
    if args.exclusions:
        pipeline.write_json(args.exclusions, {"excluded": excluded})
    log.info("%d languages retained, %d excluded", len(records), len(excluded))


def cmd_test_families(args, config):
    records = pipeline.read_metrics(args.metrics, config.rho0)
    reports, untestable = pipeline.test_families(records, config)
    rows = pipeline.family_rows(reports)
    columns = [f.name for f in dataclasses.fields(pipeline.FamilyTestReport)] + ["bonferroni_p"]
    pipeline.write_csv(args.output, rows, columns)
    sweep = alpha_sweep(reports)
    if args.alpha_sweep:
        pipeline.write_csv(args.alpha_sweep, sweep, ["alpha", "families_at_or_below", "family", "n_languages"])
    if args.json:
        pipeline.write_json(
            args.json,
            {"config": config.as_dict(), "families": rows, "untestable": untestable, "alpha_sweep": sweep},
        )
    for name in untestable:
        log.info("family %s untestable: all deltas zero", name)


def cmd_stratified(args, config):
    records = pipeline.read_metrics(args.metrics, config.rho0)
    ci = pipeline.stratified(records, config, args.subset)
    pipeline.write_json(args.output, {"subset": args.subset, "ci": dataclasses.asdict(ci)})
    log.info("%s: %.0f%% CI [%.3g, %.3g]", args.subset, 100 * ci.confidence, ci.lower, ci.upper)


def cmd_report(args, config):
    records = pipeline.read_metrics(args.metrics, config.rho0)
    reports = pipeline.read_family_reports(args.family_tests) if args.family_tests else []
    out = Path(args.outdir)
    scatter = pipeline.scatter_rows(records)
    pipeline.write_csv(out / "scatter.csv", scatter, pipeline.SCATTER_COLUMNS)
    ndo = [r for r in scatter if r["dominant"] == "NDO"]
    pipeline.write_csv(out / "scatter_ndo.csv", ndo, pipeline.SCATTER_COLUMNS)
    pipeline.write_csv(out / "families.csv", pipeline.family_summary_rows(records, reports), pipeline.FAMILY_COLUMNS)


COMMANDS = {
    "extract": cmd_extract,
    "measure": cmd_measure,
    "test-families": cmd_test_families,
    "stratified": cmd_stratified,
    "report": cmd_report,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        config = make_config(args)
        COMMANDS[args.command](args, config)
    except UsageError as exc:
        print(f"swapmin: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, OSError) as exc:
        print(f"swapmin: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
