"""Heralded-noise correction dynamics on the 1D cluster state, as classical population dynamics."""

__version__ = "0.1.0"
