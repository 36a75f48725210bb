"""Exception and warning types raised across the package."""

from __future__ import annotations


class QdsError(Exception):
    """Base class for all errors raised by qdistsim."""


class CircuitValidationError(QdsError, ValueError):
    """A circuit failed validation. ``violations`` holds the individual problems."""

    def __init__(self, violations):
        self.violations = list(violations)
        lines = "; ".join(str(v) for v in self.violations)
        super().__init__(f"invalid circuit: {lines}")


class UnschedulableError(QdsError):
    """A program is wider than the whole cluster."""


class UnsupportedNonLocalError(QdsError):
    """A two-qubit gate that is not a controlled kind spans two QPUs."""


class AncillaError(QdsError):
    """No ancilla slot could be assigned for a cat block (strict mode)."""


class CapacityError(QdsError):
    """A qubit beyond a QPU's declared capacity was used in strict mode."""


class TimingError(QdsError, ValueError):
    """Gate durations that cannot produce a schedule (zero or negative)."""


class MessageError(QdsError):
    """A classical receive found no matching message: indicates a compiler bug."""


class BackendError(QdsError):
    """Statevector backend misuse."""


class UnregisteredQubitError(BackendError, KeyError):
    def __str__(self) -> str:
        return f"unregistered qubit {self.args[0]}"


class AncillaNotResetError(BackendError):
    """EPR generation attempted on a qubit that is not in |0>."""


class MergeArityError(QdsError, ValueError):
    """Outcome count does not match the merge specification."""


class CapacityWarning(UserWarning):
    """Overflow ancillas were allocated beyond a QPU's declared capacity."""
