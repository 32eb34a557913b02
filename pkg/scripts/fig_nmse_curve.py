#!/usr/bin/env python3
"""Group-lasso NMSE versus pilot length at full scale (N=100, M=2, K=20,
noise variance 0.01). Extra CLI flags are forwarded to `udnopt nmse`.
"""
import sys

from udnopt.harness.cli import main

if __name__ == "__main__":
    argv = ["nmse", "--out", "nmse_curve.csv", *sys.argv[1:]]
    sys.exit(main(argv))
