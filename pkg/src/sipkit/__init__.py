"""Stochastic inverse problem toolkit."""
