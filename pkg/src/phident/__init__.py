"""Identification of low-dimensional linear port-Hamiltonian systems from trajectory data."""

__version__ = "0.1.0"
