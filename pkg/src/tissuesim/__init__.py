"""Deterministic multi-agent tissue-repair simulation engine."""

__version__ = "0.1.0"
