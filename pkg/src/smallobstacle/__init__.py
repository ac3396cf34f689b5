"""Numerical laboratory for 2D incompressible flow around a small obstacle."""

__version__ = "0.1.0"
