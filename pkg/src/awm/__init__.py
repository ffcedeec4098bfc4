"""Actionable world model toolkit: synthetic plant, JEPA-style model, training
and evaluation harness, and the live control-loop service."""

__version__ = "0.1.0"
