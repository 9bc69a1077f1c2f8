"""Generalized impulse (multiple time-stepping) splitting integrators and their error analysis."""

__version__ = "0.1.0"
