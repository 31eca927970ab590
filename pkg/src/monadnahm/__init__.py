"""Monads, cohomology, resolutions and Nahm complexes for charge-k data."""

__version__ = "0.1.0"
