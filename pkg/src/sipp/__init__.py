"""Paraphrase generation and selection for speech intelligibility in noise."""

__version__ = "0.1.0"
