"""Second-order variational calculus and optimality certification."""

__version__ = "0.1.0"
