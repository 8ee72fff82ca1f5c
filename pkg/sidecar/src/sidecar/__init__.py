"""Loopback HTTP service exposing three scoring capabilities over JSON:
speech synthesis, semantic similarity, and language-model perplexity."""

__version__ = "0.1.0"
