"""Spectral densities and decay exponents on fibre bundles, with the Heisenberg group as the worked model."""

__version__ = "0.1.0"
