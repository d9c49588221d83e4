"""Numerical verification of Ricci solitons with a two-dimensional Abelian Killing algebra."""

__version__ = "0.1.0"
