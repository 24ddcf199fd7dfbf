"""Respiratory early-warning-system toolkit."""

__version__ = "0.1.0"
