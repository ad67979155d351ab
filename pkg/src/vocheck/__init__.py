"""Validation obligations over finite Event-B-style models."""

__version__ = "0.1.0"
