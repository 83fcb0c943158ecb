"""Spectral verification of spatial-regularity estimates for degenerate
Kolmogorov equations ``Y u - sigma * Delta_0 u = g``."""

__version__ = "0.1.0"
