"""Steady subsonic Euler flow with a contact discontinuity in a 2-D nozzle."""

__version__ = "0.1.0"
