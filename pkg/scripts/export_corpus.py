#!/usr/bin/env python3
"""Dump seeded datasets for every corpus function as CSV files."""

import argparse
import pathlib

from kanbench.corpus import FUNCTIONS, export_dataset, make_dataset


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="datasets")
    ap.add_argument("--n", type=int, default=1000)
    ap.add_argument("--sigma", type=float, default=0.0)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for fid in FUNCTIONS:
        ds = make_dataset(fid, args.n, sigma=args.sigma, seed=args.seed)
        path = out / f"{fid}_n{args.n}_sigma{args.sigma:g}_seed{args.seed}.csv"
        export_dataset(ds, path)
        print(path)


if __name__ == "__main__":
    main()
