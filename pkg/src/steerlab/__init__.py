"""Simulation and analytics for adiabatic steering of a multilevel atom by a
cyclically modulated broadband squeezed-vacuum reservoir."""
from steerlab._backend import BACKEND

__version__ = "0.1.0"
__all__ = ["BACKEND", "__version__"]
