"""Soundness checking and summary computation for colored workflow nets by reduction."""

__version__ = "0.1.0"
