"""Desk-scale p-adic algebra for multivariate Robba rings and (phi, Gamma)-modules."""

__version__ = "0.1.0"
