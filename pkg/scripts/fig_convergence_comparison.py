#!/usr/bin/env python3
"""Fixed-rank solver convergence comparison (p=q=100, r=5, |Omega|=400).

Emits a per-seed summary CSV and one iteration trace per solver. Extra flags
are forwarded to `udnopt converge`.
"""
import sys

from udnopt.harness.cli import main

if __name__ == "__main__":
    argv = ["converge", "--trials", "10", "--out", "converge.csv", *sys.argv[1:]]
    sys.exit(main(argv))
