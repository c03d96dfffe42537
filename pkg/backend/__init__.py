"""Eulerian membrane fluid-structure solver."""

__version__ = "1.0.0"
