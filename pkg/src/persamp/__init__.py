"""Amplitudes, distances and stability checks for persistence modules."""

__version__ = "0.1.0"
