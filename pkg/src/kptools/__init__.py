"""Spectral tools for the Kadomtsev-Petviashvili equations."""

__version__ = "0.1.0"
