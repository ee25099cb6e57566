"""Offline embedding tool: text in, KGWV vector files out."""

__version__ = "0.1.0"
