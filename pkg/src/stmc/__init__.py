"""Finite timed metric spaces from sampled space-times, and distances between them."""

__version__ = "0.1.0"
