"""Exception hierarchy for specshrink.

Every error raised on purpose by this package derives from
:class:`SpecshrinkError`, so callers can catch a single type at the
boundary.  Most subclasses also derive from ``ValueError`` because they
signal bad inputs rather than internal failures.
"""


class SpecshrinkError(Exception):
    """Base class for all errors raised by specshrink."""


class DimensionError(SpecshrinkError, ValueError):
    """An array has the wrong shape, size, or axis layout."""


class DomainError(SpecshrinkError, ValueError):
    """A scalar or array value lies outside the mathematically valid range."""


class InsufficientDataError(SpecshrinkError, ValueError):
    """Not enough trials or samples for the requested computation."""


class DegenerateChannelError(SpecshrinkError, ValueError):
    """A channel (or trial/channel pair) carries no usable variation."""


class RankDeficiencyError(SpecshrinkError, ValueError):
    """A regression design or moment matrix is singular or numerically rank deficient."""


class NearSingularError(SpecshrinkError, ValueError):
    """A matrix that must be inverted is singular or too ill-conditioned to trust."""


class UnstableModelError(SpecshrinkError, ValueError):
    """An autoregressive model is not stationary (companion spectral radius >= 1)."""


class EmptyBandError(SpecshrinkError, ValueError):
    """A requested frequency band contains no grid frequencies."""


class DataFormatError(SpecshrinkError, ValueError):
    """A data file or configuration file cannot be parsed."""


class PipelineError(SpecshrinkError, RuntimeError):
    """A multi-stage estimation pipeline failed; names the stage that failed."""

    def __init__(self, stage: str, message: str):
        self.stage = stage
        super().__init__(f"pipeline stage '{stage}': {message}")
