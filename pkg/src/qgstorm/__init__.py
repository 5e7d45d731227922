"""Pseudo-spectral solver for the randomly forced dissipative QG equation on the unit square."""

__version__ = "0.1.0"
