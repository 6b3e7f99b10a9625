"""Numerical verification engine for the geometry of Cartan spaces."""

__version__ = "0.1.0"
