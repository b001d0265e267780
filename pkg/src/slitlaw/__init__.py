"""Systole trajectories, log laws and the non-ergodic slit-torus surface."""

from .interval import InconclusiveError, Interval
from .numtheory import AlphaSpec, build_table, convergents

__all__ = ["AlphaSpec", "InconclusiveError", "Interval", "build_table", "convergents"]
__version__ = "0.1.0"
