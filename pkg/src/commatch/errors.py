"""Exception taxonomy shared across the package.

Every error raised on purpose derives from CommatchError so callers (and the
CLI exit-code mapping) can tell deliberate signals from genuine bugs.
"""


class CommatchError(Exception):
    """Base class for all deliberate errors raised by this package."""


class ValidationError(CommatchError):
    """A model, layout, or input file violates a structural contract.

    Carries the full violation list so callers can report every problem at
    once instead of fixing them one at a time.
    """

    def __init__(self, violations):
        self.violations = tuple(violations)
        super().__init__("; ".join(self.violations))


class ParameterError(CommatchError, ValueError):
    """Arguments are individually well-formed but mutually inconsistent."""


class SizeGuardError(CommatchError):
    """A requested enumeration exceeds the configured size cap."""


class EmptyAmbiguitySetError(CommatchError):
    """No candidate labeling is jointly typical; matching failed."""


class InfeasibleAllocationError(CommatchError):
    """No fixed-point allocation satisfies the simplex constraints."""
