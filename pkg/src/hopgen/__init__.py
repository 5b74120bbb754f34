"""Multiplicity-weighted stochastic attention for conditioned protein sequence generation."""

__version__ = "0.1.0"
