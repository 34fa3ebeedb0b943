"""Pairwise Casimir-Polder force simulation on rasterized extruded geometries."""

__version__ = "0.1.0"
