"""Spectral-geometry laboratory for twisted de Rham and Dolbeault complexes."""

__version__ = "0.1.0"
