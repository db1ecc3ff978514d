"""Balanced tables for single-source randomness extraction with advice."""

from .params import Params

__version__ = "0.1.0"
__all__ = ["Params"]
