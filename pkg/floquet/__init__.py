"""Floquet kicked-Ising dynamics on heavy-hex and chain lattices."""

__version__ = '0.1.0'
