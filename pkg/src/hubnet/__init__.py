"""Exact design and failure analysis of survivable hub-and-spoke networks."""

__version__ = "0.1.0"
