"""Enumerate D_k for the rotated surface code and cache them as JSON artifacts."""

import argparse

from pecqec.cli import cmd_enumerate
from pecqec.codes import build_code


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--distances", default="3,5,7")
    ap.add_argument("--extra", type=int, default=3, help="weights omega..omega+extra")
    ap.add_argument("--monte-carlo", type=int, default=10_000_000)
    ap.add_argument("--output-dir", default="results")
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()
    for d in map(int, args.distances.split(",")):
        w = build_code("surface", d).omega
        path = cmd_enumerate("surface", d, w, w + args.extra, monte_carlo=args.monte_carlo,
                             workers=args.workers, output_dir=args.output_dir)
        print(f"d={d} -> {path}")


if __name__ == "__main__":
    main()
