#!/usr/bin/env python3
"""User admission demo: l1 slack minimization with deflation on a random
overloaded C-RAN instance. Extra flags are forwarded to `udnopt admission`.
"""
import sys

from udnopt.harness.cli import main

if __name__ == "__main__":
    sys.exit(main(["admission", "--sinr-target", "3.0", "--p-max", "0.4", *sys.argv[1:]]))
