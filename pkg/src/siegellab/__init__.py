"""Siegel transforms, lattice-point counting and Diophantine approximation on Grassmannians."""

__version__ = "0.1.0"
