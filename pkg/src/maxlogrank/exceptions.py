"""Exception hierarchy shared across the package."""


class MaxLogrankError(Exception):
    """Base class for all package errors."""


class DomainError(MaxLogrankError, ValueError):
    """An argument lies outside the domain of the operation."""


class MatrixError(MaxLogrankError, ValueError):
    """A matrix is not symmetric / positive semidefinite as required."""


class DegenerateDataError(MaxLogrankError, ValueError):
    """The data carry no information for the requested statistic."""


class DegenerateWeightError(DegenerateDataError):
    """A weight function has zero variance on the observed data."""

    def __init__(self, spec, message=None):
        self.spec = spec
        super().__init__(message or f"weight {spec} has zero variance on this data")


class BracketError(MaxLogrankError, ValueError):
    """A root-finding bracket does not contain a sign change."""


class NumericError(MaxLogrankError, ArithmeticError):
    """A numerical routine produced or met a non-finite value."""


class UnknownNameError(MaxLogrankError, KeyError):
    """Lookup of a named weight set, test or table failed."""

    def __str__(self):
        return str(self.args[0]) if self.args else ""
