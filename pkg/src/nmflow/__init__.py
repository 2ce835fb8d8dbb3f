"""Open-system qubit dynamics, divisibility criteria, and correlation-backflow
witnesses of non-Markovianity."""

from . import channels, correlations, divisibility, errors, mepovm, qmat, witness

__all__ = ["channels", "correlations", "divisibility", "errors", "mepovm", "qmat", "witness"]
__version__ = "0.1.0"
