"""Exception hierarchy shared by every module.

The CLI maps these onto exit codes: parameter problems exit with 2,
enumeration budgets with 3.
"""


class PottsError(Exception):
    """Base class for all errors raised by this package."""


class ParameterError(PottsError, ValueError):
    """An argument is outside the domain of the operation."""


class LoopError(ParameterError):
    """An edge joins a vertex to itself."""


class RangeError(ParameterError):
    """A vertex label or colour is out of range."""


class CoverageError(ParameterError):
    """A block system does not cover every vertex."""


class CapacityError(PottsError):
    """An exact enumeration would exceed its configured budget."""

    def __init__(self, what: str, size: int, limit: int):
        self.what = what
        self.size = size
        self.limit = limit
        super().__init__(f"{what}: {size} exceeds the budget of {limit}")


class RootNotFoundError(PottsError):
    """The phase-transition solver found no sign change to bracket."""
