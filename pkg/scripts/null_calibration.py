"""Null calibration of the two multiple-family procedures.

Part one: how often step-down minP flags any family at alpha when no family
has an effect (the familywise error rate).  Part two: the KS distance of
stratified p-values from uniform on symmetric-null families.

    python scripts/null_calibration.py --runs 200 --alpha 0.05
"""

import argparse

import numpy as np
import scipy.stats

from swapmin.stats import adjust_sd_minp, stratified_log_pvalues


def symmetric_families(n, rng):
    fams, base = {}, 1.0
    for i in range(n):
        k = int(rng.integers(1, 4))
        mags = base + np.arange(k)
        base += k
        fams[f"f{i}"] = np.concatenate([mags, -mags])
    return fams


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--runs", type=int, default=100)
    ap.add_argument("--families", type=int, default=10)
    ap.add_argument("--alpha", type=float, default=0.01)
    ap.add_argument("--n-resamples", type=int, default=999)
    ap.add_argument("--n-samples", type=int, default=100_000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    hits = 0
    for r in range(args.runs):
        fams = {f"f{j}": rng.normal(0, 1, rng.integers(3, 20)) for j in range(args.families)}
        reps = adjust_sd_minp(fams, n_resamples=args.n_resamples, seed=r)
        hits += any(rep.adjusted_p < args.alpha for rep in reps)
    print(f"minP familywise error at alpha={args.alpha}: {hits}/{args.runs} = {hits / args.runs:.3f}")

    log_p = stratified_log_pvalues(symmetric_families(50, rng), args.n_samples, seed=args.seed)
    p = np.exp(log_p)
    ks = scipy.stats.kstest(p, "uniform").statistic
    print(f"stratified p-values on 50 symmetric-null families: KS = {ks:.4f}, P(p < 0.05) = {(p < 0.05).mean():.4f}")


if __name__ == "__main__":
    main()
