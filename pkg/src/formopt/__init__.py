"""Bayesian optimisation over problem-formulation space."""
