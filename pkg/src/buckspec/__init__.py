"""Polyharmonic buckling spectra and universal eigenvalue inequalities."""

__version__ = "0.1.0"
