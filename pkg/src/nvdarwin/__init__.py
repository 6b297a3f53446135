"""Quantum Darwinism in an NV-centre nuclear-spin register."""

__version__ = "0.1.0"
