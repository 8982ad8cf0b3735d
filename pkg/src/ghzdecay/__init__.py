"""Superdecoherence of GHZ-class qubit registers under correlated phase noise."""

from .estimate import Estimate
from .noise import NoiseParams

__version__ = "0.1.0"

__all__ = ["Estimate", "NoiseParams", "__version__"]
