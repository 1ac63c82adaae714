"""Prisoner's Dilemma on scale-free networks with external investment."""

__version__ = "0.1.0"
