"""Exact analysis of discrete-time recombination on product measures."""

__version__ = "0.1.0"
