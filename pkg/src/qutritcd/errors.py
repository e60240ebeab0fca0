from __future__ import annotations


class ResourceLimitError(RuntimeError):
    """Requested operator or enumeration exceeds the configured size cap."""


class DegenerateInputError(ValueError):
    """The nested-commutator system is singular (initial and final Hamiltonians commute)."""


class DegenerateGapError(ValueError):
    """The final Hamiltonian has no second distinct level, so the energy error is undefined."""


class UndefinedRatioError(ZeroDivisionError):
    """Enhancement ratio requested with a vanishing qubit success probability."""


class NumericalFailure(RuntimeError):
    def __init__(self, message: str, step: int | None = None):
        super().__init__(message if step is None else f"{message} (step {step})")
        self.step = step


class InstanceFormatError(ValueError):
    """Malformed instance JSON or price CSV."""
