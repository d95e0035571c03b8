"""Pairwise distance distortion of sparse random projections as k and density vary.

    python3 scripts/jl_distortion.py --points 200 --dim 1000 --eps 0.5
"""

import argparse

import numpy as np

from lesionrp.reduction import RandomProjection, RpConfig, distortion_report, jl_dimension


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--points", type=int, default=200)
    ap.add_argument("--dim", type=int, default=1000)
    ap.add_argument("--eps", type=float, default=0.5)
    ap.add_argument("--seeds", type=int, default=10)
    args = ap.parse_args()

    k_jl = jl_dimension(args.points, args.eps)
    ks = sorted({10, 20, 40, 80, 160, k_jl, 2 * k_jl})
    densities = {"1": 1.0, "1/3": 1 / 3, "1/sqrt(d)": 1 / np.sqrt(args.dim)}
    print(f"JL dimension for N = {args.points}, eps = {args.eps}: k = {k_jl}")
    print(f"{'k':>5} {'density':>10} {'within':>8} {'min ratio':>10} {'max ratio':>10}")
    for k in ks:
        for label, dens in densities.items():
            reps = []
            for seed in range(args.seeds):
                X = np.random.default_rng(seed).normal(size=(args.points, args.dim))
                Y = RandomProjection(RpConfig(k=k, density=dens, seed=seed)).fit(X).transform(X)
                reps.append(distortion_report(X, Y, args.eps))
            print(f"{k:>5} {label:>10} {np.mean([r.fraction_within for r in reps]):>8.4f} "
                  f"{min(r.min_ratio for r in reps):>10.3f} {max(r.max_ratio for r in reps):>10.3f}")


if __name__ == "__main__":
    main()
