"""Modelling toolkit for flux-tunable transmons with parallel-plate capacitors."""

__version__ = "0.1.0"
