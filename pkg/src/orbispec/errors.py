"""Exception hierarchy for orbispec.

Every failure mode named by an operation contract has its own class so callers
(and the CLI's exit-code mapping) can tell them apart.
"""


class OrbispecError(Exception):
    """Base class for all library errors."""


class GroupError(OrbispecError):
    """A candidate element list does not form a valid isometry group."""


class NotClosed(GroupError):
    pass


class NoIdentity(GroupError):
    pass


class NotEffective(GroupError):
    pass


class NotIsometric(GroupError):
    pass


class DuplicateElement(GroupError):
    pass


class DegenerateDeterminant(OrbispecError):
    pass


class IllConditioned(OrbispecError):
    pass


class NonIntegralLinearPart(OrbispecError):
    pass


class NotASubgroup(OrbispecError):
    pass


class UnsupportedGeometry(OrbispecError):
    pass


class UnsupportedDimension(UnsupportedGeometry):
    pass


class LemmaViolation(OrbispecError):
    """The two local-orientability routes disagree; always an implementation bug."""


class SingularNormalAction(OrbispecError):
    pass


class InsufficientOrder(OrbispecError):
    pass


class ShellOverflow(OrbispecError):
    pass


class NonIntegerMultiplicity(OrbispecError):
    pass


class NonPositiveTime(OrbispecError):
    pass


class IllConditionedFit(OrbispecError):
    pass


class Inconclusive(OrbispecError):
    """The spectral detector cannot separate a genuine term from fit noise."""

    def __init__(self, message, fit=None):
        super().__init__(message)
        self.fit = fit


class ConfigError(OrbispecError):
    pass


class InsufficientCutoff(OrbispecError):
    """Spectrum truncation error is too large relative to the trace values."""
