"""Numerical laboratory for particle cooling in a bistable, feedback-driven optical cavity."""

__version__ = "0.1.0"
