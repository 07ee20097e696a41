"""Exact computations for SO*(2n)- and SO*(2n)Sp(1)-structures."""

__version__ = "0.1.0"
