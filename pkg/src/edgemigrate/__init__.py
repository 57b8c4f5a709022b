"""Proactive dominant-interval data migration at the edge."""

__version__ = "0.1.0"
