"""Spectral tests for detecting community structure in random graphs."""

__version__ = "0.1.0"
