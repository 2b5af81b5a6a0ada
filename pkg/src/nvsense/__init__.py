"""Simulation and analysis toolkit for NV-centre quantum sensing."""
__version__ = "0.1.0"
