"""Spectral singularities and gallery modes of a cylindrical gain medium."""
__version__ = "0.1.0"
