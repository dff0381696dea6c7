"""Simulation and analytic theory of class-assignment bias in untrained MLPs."""

__version__ = "0.1.0"

from .errors import ConfigError, DomainError, EnsembleError, NumericalError  # noqa: E402

__all__ = ["ConfigError", "DomainError", "EnsembleError", "NumericalError", "__version__"]
