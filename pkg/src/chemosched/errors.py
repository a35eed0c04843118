"""Exception hierarchy shared by all modules."""

from __future__ import annotations


class CTSError(Exception):
    """Base class for every error raised by this package."""


class InstanceError(CTSError, ValueError):
    """A registration, resource pool or instance breaks a structural invariant."""


class InputError(CTSError, ValueError):
    """Inputs are inconsistent with each other (e.g. unknown registration)."""


class UsageError(CTSError):
    """An operation was called on data it does not apply to."""


class ConfigError(CTSError, ValueError):
    """Contradictory or malformed parameters."""


class ScenarioError(CTSError):
    """A disruption scenario cannot be built from the given schedule."""


class SizeLimitError(CTSError):
    """Instance too large for exhaustive enumeration."""


class ParseError(CTSError):
    """Malformed fact file. Carries the 1-based line and column."""

    def __init__(self, message: str, line: int = 0, column: int = 0):
        self.line = line
        self.column = column
        where = f"line {line}, column {column}: " if line else ""
        super().__init__(where + message)


class InfeasibleError(CTSError):
    """No feasible schedule was found; ``witness`` names the blocking registrations."""

    def __init__(self, message: str, witness=()):
        self.witness = tuple(sorted(set(witness)))
        super().__init__(f"{message} (witness: {list(self.witness)})")
