"""Run the whole UD (or SUD) analysis from raw treebanks to report tables.

    python scripts/reproduce_ud.py --treebanks ud-treebanks-v2.17 \
        --taxonomy languoids.csv --aliases aliases.tsv --out results/ud

The treebanks, the languoid table and the alias file are manual downloads;
see the README.  Every intermediate file lands in ``--out``.
"""

import argparse
import sys
from pathlib import Path

from swapmin.cli import main as swapmin


def run(*argv, required=True):
    rc = swapmin([str(a) for a in argv])
    if rc and required:
        sys.exit(rc)
    return rc


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--treebanks", required=True)
    ap.add_argument("--taxonomy", required=True)
    ap.add_argument("--aliases")
    ap.add_argument("--dominant-orders")
    ap.add_argument("--style", choices=["ud", "sud"], default="ud")
    ap.add_argument("--out", default="results")
    ap.add_argument("--n-samples", type=int, default=10**6)
    ap.add_argument("--n-resamples", type=int, default=100_000)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    common = ["--seed", args.seed, "--workers", args.workers]
    run("extract", args.treebanks, "--style", args.style, "-o", out / "counts.tsv", "--exclusions", out / "extract_excluded.json", *common)

    measure = ["measure", out / "counts.tsv", "--taxonomy", args.taxonomy, "-o", out / "metrics.csv", "--exclusions", out / "measure_excluded.json"]
    if args.aliases:
        measure += ["--aliases", args.aliases]
    if args.dominant_orders:
        measure += ["--dominant-orders", args.dominant_orders]
    run(*measure, *common)

    run("test-families", out / "metrics.csv", "--n-resamples", args.n_resamples, "-o", out / "families.csv", "--alpha-sweep", out / "alpha_sweep.csv", *common)
    run("stratified", out / "metrics.csv", "--n-samples", args.n_samples, "-o", out / "ci_all.json", *common)
    # a small sample may have no NDO language in two or more families
    if run("stratified", out / "metrics.csv", "--subset", "ndo", "--n-samples", args.n_samples, "-o", out / "ci_ndo.json", *common, required=False):
        print("NDO interval skipped", file=sys.stderr)
    run("report", out / "metrics.csv", "--family-tests", out / "families.csv", "--outdir", out / "report", *common)
    print(f"results written to {out}")


if __name__ == "__main__":
    main()
