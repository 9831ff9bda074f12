"""Norm equalities for rank-one perturbations of the identity on concrete spaces."""

__version__ = "0.1.0"
