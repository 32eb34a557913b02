#!/usr/bin/env python3
"""TIM fixed-rank completion phase transition at full scale (K=30,
r in 1..10, |S| in steps of 58). Extra flags forwarded to `udnopt tim-pt`.
"""
import sys

from udnopt.harness.cli import main

if __name__ == "__main__":
    argv = ["tim-pt", "--out", "tim_pt.csv", *sys.argv[1:]]
    sys.exit(main(argv))
