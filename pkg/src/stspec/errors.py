"""Exception types shared across the package."""


class StspecError(Exception):
    """Base class for all package errors."""


class InvalidModelError(StspecError):
    """Spectral model parameters or samples violate the model contract."""


class LayoutGenerationError(StspecError):
    """Random layout generation failed to satisfy the ordering invariant."""


class QuadratureAccuracyError(StspecError):
    """Deterministic attenuation evaluation did not reach target accuracy.

    Carries the residual estimate in ``residual``.
    """

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class SynthesisError(StspecError):
    """Monte-Carlo field synthesis grid is under-resolved."""


class NoLinearTrendError(StspecError):
    """No cutoff produced an acceptable linear tail fit.

    ``stage`` identifies the fit stage ('T' for duration, 'L' for register
    length) when raised from the two-stage slope extraction.
    """

    def __init__(self, message, stage=None, row=None):
        super().__init__(message)
        self.stage = stage
        self.row = row


class IllConditionedError(StspecError):
    """A truncated comb-weight matrix cannot be inverted reliably."""

    def __init__(self, message, m=None, index_set=None, cond=None):
        super().__init__(message)
        self.m = m
        self.index_set = tuple(index_set) if index_set is not None else None
        self.cond = cond


class ReconstructionImpossibleError(StspecError):
    """Every harmonic's comb-weight matrix was ill conditioned."""


class ConfigError(StspecError):
    """Run configuration is missing keys or holds invalid values."""


class MissingInputError(StspecError):
    """A pipeline stage is missing required input files.

    ``missing`` lists the absent items.
    """

    def __init__(self, message, missing=()):
        super().__init__(message)
        self.missing = list(missing)


class TruncationWarning(UserWarning):
    """A truncated harmonic sum has an estimated tail above tolerance."""
