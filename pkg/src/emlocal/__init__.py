"""Spectral toolkit for local and nonlocal observables of the free electromagnetic field."""

__version__ = "0.1.0"
