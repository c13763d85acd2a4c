"""Command-line interface for nilflow."""

__all__ = []
