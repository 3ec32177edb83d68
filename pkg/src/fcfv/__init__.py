"""Face-centred finite volume solvers for Poisson and Stokes problems."""

__version__ = "0.1.0"
