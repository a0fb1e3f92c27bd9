"""Reduced-order internal-model controllers for boundary-controlled PDEs."""

__version__ = "0.1.0"
