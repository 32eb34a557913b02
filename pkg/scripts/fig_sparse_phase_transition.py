#!/usr/bin/env python3
"""Sparse-recovery phase transition heat map at full scale (N=100, M=2).

Writes a `K,L,successes,trials,probability` CSV plus metadata sidecar.
Extra CLI flags are forwarded to `udnopt sparse-pt`.
"""
import sys

from udnopt.harness.cli import main

if __name__ == "__main__":
    argv = ["sparse-pt", "--out", "sparse_pt.csv", *sys.argv[1:]]
    sys.exit(main(argv))
