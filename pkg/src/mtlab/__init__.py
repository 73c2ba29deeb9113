"""Numerical laboratory for the multi-particle Moser-Trudinger functionals on S^2."""

__version__ = "0.1.0"
