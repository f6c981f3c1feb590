"""Situation-aware query enrichment and community-based friend recommendation."""

__version__ = "0.1.0"
