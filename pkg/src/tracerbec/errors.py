"""Exception types raised across the package."""


class TracerError(Exception):
    """Base class for all package errors."""


class ModelError(TracerError, ValueError):
    """Invalid physical parameters or potential definitions."""


class UnsupportedEvaluation(TracerError, ValueError):
    pass


class SpaceMismatch(TracerError, ValueError):
    """A field was handed to a transform in the wrong space, or on another grid."""


class PreconditionError(TracerError, ValueError):
    pass


class ZeroModeError(PreconditionError):
    """The k=0 mode makes an inverse operator ill-defined and no projection was requested."""


class ResonanceError(TracerError):
    """A supercritical traveling wave was requested without limiting absorption."""


class ResolutionError(TracerError):
    """The grid does not resolve the resonance sphere."""


class ExtrapolationError(TracerError):
    """The epsilon extrapolation behaved non-monotonically.

    ``samples`` carries the raw (epsilon, force) pairs for diagnosis.
    """

    def __init__(self, message, samples=None):
        super().__init__(message)
        self.samples = samples


class CurveShapeError(TracerError):
    pass


class StepError(TracerError):
    """Time step rejected (drift bound violated or non-finite field)."""


class ConfigError(TracerError, ValueError):
    pass
