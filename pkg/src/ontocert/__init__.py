"""Certification toolkit for a prepare-and-measure classicality game."""

__version__ = "0.1.0"
