"""Displacement-squeeze receiver simulations for squeezed BPSK."""

__version__ = "0.1.0"
