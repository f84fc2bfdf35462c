"""Glauber and block dynamics of the ferromagnetic Potts model at desk scale."""

__version__ = "0.1.0"
