"""Numerical Darboux-Lie derivatives on trivial principal bundles over charts."""

__version__ = "0.1.0"
