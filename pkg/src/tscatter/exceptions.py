"""Exception types shared across the package."""


class NotSpdError(ValueError):
    """A matrix required to be symmetric positive definite is not."""


class DegeneracyError(ValueError):
    """A derived scatter matrix collapsed onto a lower-dimensional set."""


class NuOutOfRange(ValueError):
    """The tail index nu is outside the range supported by the requested functional."""


class DomainViolation(Exception):
    """The input law is outside the existence domain of the functional.

    Carries the :class:`~tscatter.domain_check.DomainReport` describing the
    violating subspace.
    """

    def __init__(self, report, message=None):
        self.report = report
        super().__init__(message or "law is outside the existence domain")


class NumericalBreakdown(RuntimeError):
    """The fixed-point iteration produced an invalid iterate.

    Impossible in exact arithmetic once the domain check passes; signals an
    ill-conditioned input.
    """


class NoPositiveSolution(ValueError):
    """The scale profile equation has no positive root at the given center."""


class EnumerationBudgetError(ValueError):
    """Exact subspace enumeration would exceed the configured work budget.

    Raised instead of silently running for hours; callers can switch to
    ``method="randomized"`` for a documented non-exact check.
    """


class CsvParseError(ValueError):
    """A CSV input file could not be parsed into a sample."""
