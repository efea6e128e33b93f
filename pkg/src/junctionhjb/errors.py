"""Exception types shared across the package."""


class JunctionError(Exception):
    """Base class for all package errors."""


class InvalidPointError(JunctionError, ValueError):
    """A point violates the junction geometry (e.g. negative normal coordinate)."""


class SchemaError(JunctionError, ValueError):
    """A problem file does not match the documented schema."""


class EmptyControlSetError(JunctionError, ValueError):
    """A control set that must be non-empty is empty."""


class UnknownAtomError(JunctionError, KeyError):
    """A control law references an atom id that the problem does not define."""


class NotCoerciveError(JunctionError, ValueError):
    """Normal-shift minimization is unbounded: the atom set has one-sided normal velocities."""


class NormalControllabilityError(JunctionError, ValueError):
    """No admissible control exists at an interface state (normal-span condition fails)."""


class ConvergenceError(JunctionError, RuntimeError):
    """Value iteration did not reach the requested tolerance within max_iter sweeps."""


class InfeasibleTrajectoryError(JunctionError, ValueError):
    """An operation requiring a feasible trajectory received an infeasible one."""


class BudgetExceededError(JunctionError, ValueError):
    """An enumeration would exceed the configured law budget."""


class DomainError(JunctionError, ValueError):
    """A point lies outside the grid domain."""
