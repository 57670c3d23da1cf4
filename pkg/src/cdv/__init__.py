"""Discourse-vector passage retrieval for structured entity/aspect queries."""

__version__ = "0.1.0"
