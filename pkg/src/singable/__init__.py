"""Constrained decoding and evaluation toolkit for singable lyric translation."""

__version__ = "0.1.0"
