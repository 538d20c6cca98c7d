"""Desk-scale experiments with block Toeplitz determinants and traces."""

__version__ = "0.1.0"

from .symbols import FourierSymbol  # noqa: E402
from .regularity import CharFunction  # noqa: E402

__all__ = ["FourierSymbol", "CharFunction", "__version__"]
