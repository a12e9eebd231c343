"""Spectral laboratory for norm inflation of the scalar Zakharov system."""

__version__ = "0.1.0"
