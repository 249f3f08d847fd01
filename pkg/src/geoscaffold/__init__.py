"""Geometric scaffolding for trajectory-controlled driving video generation."""

__version__ = "0.1.0"
