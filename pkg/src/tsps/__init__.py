"""Travelling-salesman based variable-density sampling trajectories."""

__version__ = "0.1.0"
