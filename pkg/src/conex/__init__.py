"""Numerical toolkit for blow-up problems on cones."""

__version__ = "0.1.0"
