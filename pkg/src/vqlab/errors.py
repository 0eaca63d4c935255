"""Exception types shared across the toolkit."""


class VQLabError(Exception):
    """Base class for all toolkit errors."""


class CorruptInputError(VQLabError):
    """Raw media file does not match its declared metadata."""


class FormatError(VQLabError):
    """Unsupported or inconsistent clip format."""


class UnsupportedRatioError(VQLabError):
    """Requested resampling ratio is not supported."""


class EncoderFailureError(VQLabError):
    """External encoder command failed."""

    def __init__(self, message: str, diagnostics: str = ""):
        super().__init__(message)
        self.diagnostics = diagnostics


class DesignInfeasibleError(VQLabError):
    """Constrained randomization could not be satisfied within the retry budget."""


class PipelineError(VQLabError):
    """Score-processing pipeline encountered inconsistent data."""


class DegenerateDataError(VQLabError):
    """Input data carries no usable signal (flat, constant, or empty)."""


class UndefinedCorrelationError(VQLabError):
    """Correlation undefined because one side has zero variance."""
