"""Superslow stochastic-bifurcation models by iterative computer algebra."""
__version__ = "0.1.0"
