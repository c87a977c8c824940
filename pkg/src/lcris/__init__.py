"""Transition-aware phase design and evaluation for liquid-crystal RIS."""

__version__ = "0.1.0"
