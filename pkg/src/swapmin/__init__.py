"""Swap distance minimization in subject/object/verb order across languages."""

__version__ = "0.1.0"
