"""Gaussian-basis quantum Monte Carlo for fermionic and Bose/Fermi systems."""

__version__ = "0.1.0"
