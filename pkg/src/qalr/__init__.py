"""Certified lower bounds on the approximation ratio of quantum annealing
for MaxCut on regular graphs."""

__version__ = "0.1.0"
