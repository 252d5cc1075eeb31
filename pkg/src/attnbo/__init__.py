"""Batch Bayesian optimization with an attentive neural process surrogate."""

__version__ = "0.1.0"
