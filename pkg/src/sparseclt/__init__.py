"""Exact solvers, cavity recursions and CLT experiments for optimisation problems on sparse random graphs."""

__version__ = "0.1.0"
