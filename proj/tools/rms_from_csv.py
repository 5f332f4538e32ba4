#!/usr/bin/env python3
"""Recompute tracking-error RMS from a step CSV and compare with its summary.

Usage: rms_from_csv.py RUN_PREFIX [--rel-tol 1e-12]

RUN_PREFIX is <dir>/<name>; reads RUN_PREFIX.steps.csv and RUN_PREFIX.summary.json.
The error is recomputed as y_d - y_meas rather than read from the e column.
"""
import argparse
import csv
import json
import math
import sys


def rms(values):
    return math.sqrt(sum(v * v for v in values) / len(values)) if values else float("nan")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("prefix")
    ap.add_argument("--rel-tol", type=float, default=1e-12)
    args = ap.parse_args()

    with open(args.prefix + ".summary.json") as f:
        summary = json.load(f)
    with open(args.prefix + ".steps.csv", newline="") as f:
        rows = list(csv.DictReader(f))

    err = [float(r["y_d"]) - float(r["y_meas"]) for r in rows]
    start = summary["post_warmup_start"]
    got = {"rms_error_total": rms(err), "rms_error_post_warmup": rms(err[start:])}

    ok = len(rows) == summary["steps"]
    print(f"rows {len(rows)} (summary {summary['steps']})")
    for key, value in got.items():
        ref = summary[key]
        rel = abs(value - ref) / max(abs(ref), 1e-300)
        ok &= rel <= args.rel_tol
        print(f"{key}: csv {value:.17g} summary {ref:.17g} rel diff {rel:.3g}")
    print("OK" if ok else "MISMATCH")
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
