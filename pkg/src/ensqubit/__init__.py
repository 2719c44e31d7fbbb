"""Pulse-level simulator of a dark-state ensemble qubit in a rare-earth crystal."""

__version__ = "0.1.0"
