"""Simulation and fault enumeration for an error-detected composite CCZ gate."""

__version__ = "0.1.0"
