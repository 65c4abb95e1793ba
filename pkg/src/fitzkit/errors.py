"""Exception types shared across the toolkit."""


class FitzkitError(Exception):
    """Base class for all toolkit errors."""


class DimensionMismatchError(FitzkitError):
    """Operands live in different dimensions."""


class ValidationError(FitzkitError):
    """A declared invariant is violated at construction or load time."""


class NotSeparableError(FitzkitError):
    """Separation requested for a point inside (or too close to) the set."""


class NoClosedFormError(FitzkitError):
    """No closed form is available and the iterative fallback exceeded its budget."""


class NotMaximalError(FitzkitError):
    """Operation requires a maximally monotone operator (finite graphs excluded)."""


class ZOnDomainError(FitzkitError):
    """Quotient base point coincides with a sampled domain point."""


class VacuousForFiniteGraphError(FitzkitError):
    """Domain projection scan is vacuous for finite graphs (F is finite everywhere)."""


class ScenarioParseError(FitzkitError):
    """Scenario file could not be parsed."""
