"""Exact and Monte Carlo checks of posterior contraction bounds for non-i.i.d. experiments."""

__version__ = "0.1.0"
