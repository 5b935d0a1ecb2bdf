"""Sum-rate capacity of massive-MIMO uplink receive antenna selection under
Nakagami-m fading: exact evaluation, selection algorithms, the order-statistics
upper bound, its Gaussian asymptotics and a seeded Monte Carlo harness."""

from .errors import CapExceededError, ConvergenceError, DomainError, NumericalError

__version__ = "0.1.0"

__all__ = ["CapExceededError", "ConvergenceError", "DomainError", "NumericalError"]
