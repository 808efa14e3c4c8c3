"""Hecke operators on the boundary of right-angled polygon groups."""

__version__ = "0.1.0"
