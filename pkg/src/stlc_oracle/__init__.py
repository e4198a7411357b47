"""Exact oracles for quadratic obstructions to small-time local
controllability of two-input control-affine systems."""

__version__ = "0.1.0"
