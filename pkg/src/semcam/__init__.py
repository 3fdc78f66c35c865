"""Semantic control space for aerial camera shots."""

__version__ = "0.1.0"
