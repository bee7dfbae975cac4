"""Exception types shared across the package."""


class RankAggError(Exception):
    """Base class for all rankagg errors."""


class DomainError(RankAggError, ValueError):
    """A vector lies outside the domain required by a divergence family."""


class NaturalParamOverflowError(RankAggError, ValueError):
    """Natural parameters exceeded the configured cap (diverging iterates)."""

    def __init__(self, message, offending=None):
        super().__init__(message)
        self.offending = offending


class DegenerateInputError(RankAggError, ValueError):
    """Input is structurally degenerate (constant columns, single block, ...)."""


class UndefinedMetricError(RankAggError, ValueError):
    """A rank metric is undefined for the given inputs (e.g. zero variance)."""


class LetorFormatError(RankAggError, ValueError):
    """A LETOR-format line or column map is malformed."""


class PowerIterationError(RankAggError, RuntimeError):
    """Power iteration failed to reach the stationary distribution."""


class UnsupportedFamilyError(RankAggError, ValueError):
    """The requested divergence family is not supported by this operation."""
