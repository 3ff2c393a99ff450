#!/usr/bin/env python3
"""Run every experiment in a suite config and print a verdict table.

    python3 scripts/run_suite.py [configs/suite.json] [--out results]
"""
import argparse
import sys
import time
from dataclasses import replace
from pathlib import Path

from bqc.experiments import load_config, run_experiment


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("config", nargs="?", default=str(Path(__file__).parents[1] / "configs/suite.json"))
    ap.add_argument("--out", default=None, help="directory for CSV/JSON reports")
    ap.add_argument("--only", nargs="*", default=None, help="experiment names to run")
    args = ap.parse_args()

    configs = load_config(args.config)
    configs = configs if isinstance(configs, list) else [configs]
    failed = 0
    for cfg in configs:
        if args.only and cfg.label not in args.only:
            continue
        if args.out:
            cfg = replace(cfg, output=str(Path(args.out) / cfg.label))
        t = time.time()
        rep = run_experiment(cfg)
        failed += not rep.passed
        print(f"{cfg.label:22s} {'PASS' if rep.passed else 'FAIL'}  {time.time() - t:6.1f}s")
        for k, v in rep.fits.items():
            if v is not None:
                print(f"    {k} = {v:.6g}")
        for note in rep.notes:
            print(f"    # {note}")
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
