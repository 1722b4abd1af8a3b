"""Time the stratified CI on a synthetic family table and check worker invariance.

    python scripts/bench_stratified.py --families 111 --n-samples 1000000 --workers 1 4
"""

import argparse
import time

import numpy as np

from swapmin.stats import stratified_ci


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--families", type=int, default=111)
    ap.add_argument("--max-size", type=int, default=30)
    ap.add_argument("--n-samples", type=int, default=10**6)
    ap.add_argument("--workers", type=int, nargs="+", default=[1])
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    fams = {f"f{i:03d}": rng.normal(-0.05, 1, rng.integers(1, args.max_size)) for i in range(args.families)}
    print(f"{args.families} families, {sum(map(len, fams.values()))} languages, {args.n_samples} draws")
    seen = set()
    for w in args.workers:
        start = time.perf_counter()
        ci = stratified_ci(fams, n_samples=args.n_samples, seed=args.seed, workers=w)
        print(f"workers={w:<3d} {time.perf_counter() - start:7.2f} s  CI [{ci.lower:.4g}, {ci.upper:.4g}]")
        seen.add((ci.lower, ci.upper))
    print("identical across worker counts" if len(seen) == 1 else "MISMATCH across worker counts")


if __name__ == "__main__":
    main()
