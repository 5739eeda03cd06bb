"""Gibbs compromises of incompatible conditionals and objective Bayesian Kriging."""

__version__ = "1.0.0"
