"""Minimum communication cost for correlated sources under broadcast and dispersive routing."""

__version__ = "0.1.0"
