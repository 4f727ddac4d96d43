#!/usr/bin/env python3
"""Cross-validation dimension-selection study across all five models.

For each model, runs the CV selector on repeated draws and tabulates how
often the chosen dimension falls below, at, or above the truth.

    python3 scripts/run_cv_study.py --n 200 --reps 100 --sigma 0.1 0.2
"""

import argparse
import csv
import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from manifold_sdr.evaluation import run_cv_study
from manifold_sdr.simgen import MODEL_IDS, ModelSpec


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="cv_counts.csv")
    ap.add_argument("--p", type=int, default=10)
    ap.add_argument("--n", type=int, default=200)
    ap.add_argument("--reps", type=int, default=100)
    ap.add_argument("--seed", type=int, default=20240817)
    ap.add_argument("--sigma", type=float, nargs="*", default=[0.1, 0.2])
    ap.add_argument("--models", nargs="*", default=list(MODEL_IDS))
    args = ap.parse_args()

    rows = []
    for sigma in args.sigma:
        for model in args.models:
            spec = ModelSpec(model=model, p=args.p, n=args.n, sigma=sigma, seed=args.seed)
            res = run_cv_study(spec, R=args.reps)
            under, correct, over = res.counts
            failed = args.reps - (under + correct + over)
            rows.append([model, args.p, args.n, sigma, under, correct, over, failed])
            print(
                f"{model} sigma={sigma}: under={under} correct={correct} "
                f"over={over} failed={failed}"
            )
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["model", "p", "n", "sigma", "under", "correct", "over", "failed"])
        w.writerows(rows)
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
