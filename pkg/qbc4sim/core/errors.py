"""
QBC4 Simulator - Exceptions
===========================

All errors raised by the simulator derive from QBCError so callers (and the
CLI) can catch the whole family at once.
"""


class QBCError(Exception):
    """Base exception for the simulator."""
    pass


class RegistryError(QBCError):
    """Raised for invalid subsystem bookkeeping (duplicates, unknown factors, bad cuts)."""
    pass


class DimensionMismatchError(QBCError):
    """Raised when two objects live on incompatible registries."""
    pass


class StateValidationError(QBCError):
    """Raised when a state, density operator or unitary violates its invariants."""
    pass


class EnsembleError(QBCError):
    """Raised for malformed basis ensembles or ensemble files."""
    pass


class PhaseError(QBCError):
    """Raised when a protocol step is attempted in the wrong phase."""
    pass


class HolderViolation(QBCError):
    """Raised when a party touches a subsystem it does not hold."""

    def __init__(self, party: str, operation: str, subsystems):
        self.party = party
        self.operation = operation
        self.subsystems = tuple(subsystems)
        super().__init__(
            f"{party} attempted '{operation}' on factors it does not hold: "
            f"{', '.join(str(s) for s in self.subsystems)}"
        )


class AttackSpecError(QBCError):
    """Raised for malformed attack descriptions."""
    pass


class ConfigError(QBCError):
    """Raised for invalid run configurations."""
    pass
