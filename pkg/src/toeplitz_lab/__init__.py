"""Numerical laboratory for Toeplitz operators on the type-IV Cartan domain."""

__version__ = "0.1.0"
