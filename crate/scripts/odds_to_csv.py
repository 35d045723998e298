#!/usr/bin/env python3
"""Convert an ODDS .mat file (X, y) to CSV with columns x0..x{D-1},label."""

import argparse
import csv
import sys

from scipy.io import loadmat


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("mat")
    ap.add_argument("csv")
    args = ap.parse_args()

    m = loadmat(args.mat)
    x, y = m["X"], m["y"].ravel()
    if x.shape[0] != y.shape[0]:
        sys.exit(f"X has {x.shape[0]} rows but y has {y.shape[0]}")
    with open(args.csv, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow([f"x{j}" for j in range(x.shape[1])] + ["label"])
        for row, label in zip(x, y):
            w.writerow([repr(float(v)) for v in row] + [int(label)])
    print(f"{args.csv}: {x.shape[0]} rows, {x.shape[1]} features, {int(y.sum())} anomalies")


if __name__ == "__main__":
    main()
