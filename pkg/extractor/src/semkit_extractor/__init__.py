"""Checkpoint extraction bridge for the semkit toolkit."""

__version__ = "0.1.0"
