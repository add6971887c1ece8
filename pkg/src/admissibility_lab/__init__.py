"""Admissibility and transfer-function laboratory for semigroup models."""

__version__ = "0.1.0"
