#!/usr/bin/env python3
"""Monte Carlo growth exponents over a grid of coupling strengths, as CSV on stdout."""

import argparse
import csv
import sys

from starkprufer.random import CouplingSampler, mc_radius_exponent
from starkprufer.special import ModelParams


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--F", type=float, default=1.0)
    ap.add_argument("--lambdas", default="0.5,1,1.5,2")
    ap.add_argument("--N", type=int, default=100_000)
    ap.add_argument("--trials", type=int, default=100)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--family", default="gaussian")
    args = ap.parse_args()

    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["lambda", "theory", "endpoint_mean", "endpoint_stderr", "slope_mean", "slope_stderr"])
    for lam in (float(v) for v in args.lambdas.split(",")):
        r = mc_radius_exponent(ModelParams(args.F), CouplingSampler(args.family, lam, args.seed), args.N, args.trials)
        w.writerow([lam, lam * lam / (8 * args.F), r.mean_exp, r.stderr, r.slope_mean, r.slope_stderr])


if __name__ == "__main__":
    main()
