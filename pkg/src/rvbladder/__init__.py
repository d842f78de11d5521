"""Doped RVB ladders: exact construction, linear-cost reduced blocks, GGM and t-J diagonalization."""

__version__ = "0.1.0"
