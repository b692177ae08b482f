"""Exact computations on digit-constrained fractal sets and dilation orbits."""

__version__ = "0.1.0"
