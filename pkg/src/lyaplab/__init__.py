"""Numerical toolkit for Lyapunov exponents of random matrix products."""

__version__ = "0.1.0"
