"""Periodic phase-field and sharp-interface toolkit on the flat torus."""

__version__ = "0.1.0"
