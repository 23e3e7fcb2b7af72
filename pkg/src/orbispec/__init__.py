"""Spectral geometry of good orbifolds: torus and sphere quotients by finite isometry groups."""

__version__ = "0.1.0"
