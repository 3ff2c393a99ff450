#!/usr/bin/env python3
"""Ratio N(w0;B) / (sigma_inf * S * B^(n-2)) for a quadric over a range of B.

Counts come from a single shell histogram up to the largest B, so the sweep
costs one enumeration.

    python3 scripts/quadric_ratio_sweep.py configs/forms/quadric5_sum4_minus1.json \
        --B 10 20 40 80 --samples 1000000
"""
import argparse

from bqc.archimedean import sigma_infinity
from bqc.counting import quadric_shell_counts
from bqc.forms import load_form
from bqc.padic import singular_series


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("form")
    ap.add_argument("--B", type=int, nargs="+", default=[25, 50, 100])
    ap.add_argument("--samples", type=int, default=10**6)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--q-max", type=int, default=20)
    ap.add_argument("--p-max", type=int, default=50)
    args = ap.parse_args()

    F = load_form(args.form)
    sig = sigma_infinity(F, samples=args.samples, seed=args.seed)
    ser = singular_series(F, args.q_max, args.p_max)
    print(f"sigma_inf = {sig.value:.6f} +- {sig.mc_stderr:.6f}")
    print(f"series    = {ser.value:.7f} (tail {ser.tail_bound:.2e}, q-series {ser.alternatives[0].value:.7f})")
    shells = quadric_shell_counts(F, max(args.B))
    print(f"{'B':>6} {'count':>14} {'predicted':>16} {'ratio':>9}")
    for B in sorted(args.B):
        count = int(shells[:B + 1].sum())
        pred = sig.value * ser.value * B ** (F.n - 2)
        print(f"{B:>6} {count:>14} {pred:>16.1f} {count / pred:>9.5f}")


if __name__ == "__main__":
    main()
