"""Toolkit for building and analyzing subjective studies of space-time subsampled video."""

__version__ = "0.1.0"
