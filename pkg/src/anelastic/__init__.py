"""Spectral Galerkin solver for the anelastic Navier-Stokes system with degenerate density."""

__version__ = "0.1.0"
