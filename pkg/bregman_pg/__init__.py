"""Bregman Proximal Gradient Methods and Benchmark Harness."""

__version__ = "0.1.0"
