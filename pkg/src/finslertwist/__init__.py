"""Curvature of twisted product Finsler metrics, verified against a jet oracle."""

__version__ = "0.1.0"
