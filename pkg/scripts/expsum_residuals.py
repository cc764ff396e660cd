#!/usr/bin/env python3
"""Window sums against their stationary-phase prediction, one row per l."""

import argparse

import numpy as np

from starkprufer.expsum import SqrtPerturbation, precise_asymptotic, window_sum
from starkprufer.special import ModelParams, ReferenceSolution


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--F", type=float, default=1.0)
    ap.add_argument("--E", type=float, default=0.0)
    ap.add_argument("--lam", type=float, default=1.0)
    ap.add_argument("--l-min", type=int, default=30)
    ap.add_argument("--l-max", type=int, default=300)
    args = ap.parse_args()

    rs = ReferenceSolution(ModelParams(args.F, args.E, args.lam))
    h = SqrtPerturbation.canonical(args.lam, args.F)
    ls = np.arange(args.l_min, args.l_max + 1)
    res = []
    print("l,abs_raw,abs_predicted,residual,residual_l32")
    for l in ls:
        raw = window_sum(rs, int(l), h)
        pred = precise_asymptotic(rs, int(l), h).predicted
        res.append(abs(raw - pred))
        print(f"{l},{abs(raw):.10g},{abs(pred):.10g},{res[-1]:.6e},{res[-1] * l**1.5:.6f}")
    print(f"# log-log slope {np.polyfit(np.log(ls), np.log(res), 1)[0]:.4f}")


if __name__ == "__main__":
    main()
