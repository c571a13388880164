"""Aspect-based sentiment analysis over fused constituency/dependency graphs."""

__version__ = "0.1.0"
