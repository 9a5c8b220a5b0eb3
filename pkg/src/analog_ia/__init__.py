"""Interference alignment with analog channel-state feedback."""

__version__ = "0.1.0"
