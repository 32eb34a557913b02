#!/usr/bin/env python3
"""Group-sparse beamforming demo on a random C-RAN instance, reporting the
chosen active set, network power, the all-active baseline, and (L <= 4) the
exhaustive-oracle gap. Extra flags are forwarded to `udnopt gsbf`.
"""
import sys

from udnopt.harness.cli import main

if __name__ == "__main__":
    sys.exit(main(["gsbf", *sys.argv[1:]]))
