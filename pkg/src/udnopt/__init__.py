"""Sparse and low-rank optimization toolkit for dense wireless networks."""

__version__ = "0.1.0"
