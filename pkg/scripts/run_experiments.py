#!/usr/bin/env python3
"""Run every named experiment and collect the reports.

Usage: python scripts/run_experiments.py [--seed N] [--out-dir reports]

Equivalent to looping `fermatph experiment --name <each>`; exits nonzero
if any experiment fails its checks.
"""

import argparse
import json
import sys
import time
from pathlib import Path

from fermatph.experiments import EXPERIMENTS, run_experiment


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out-dir", type=Path, default=Path("reports"))
    args = ap.parse_args()

    all_ok = True
    for name in EXPERIMENTS:
        t0 = time.perf_counter()
        report = run_experiment(name, seed=args.seed, out_dir=args.out_dir)
        elapsed = time.perf_counter() - t0
        status = "PASS" if report["passed"] else "FAIL"
        print(f"{name:>18}: {status} ({elapsed:.1f}s) -> {report['report_path']}")
        all_ok &= report["passed"]
    summary = {"seed": args.seed, "passed": all_ok,
               "experiments": sorted(EXPERIMENTS)}
    (args.out_dir / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    return 0 if all_ok else 1


if __name__ == "__main__":
    sys.exit(main())
