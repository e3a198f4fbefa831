"""Exception hierarchy shared across the pipeline.

Every error raised by this package derives from :class:`PipelineError`, so
callers (the service layer, the CLI) can map failures to HTTP statuses and
exit codes without matching on message text.  ``kind`` groups errors into the
three classes the CLI distinguishes: "usage", "parse" and "runtime".
"""


class PipelineError(Exception):
    kind = "runtime"


class UsageError(PipelineError):
    """Bad invocation: invalid flags, missing inputs, malformed config."""

    kind = "usage"


class InvalidConfigError(UsageError):
    pass


class ZeroVectorError(PipelineError):
    """Feature vector with (near-)zero norm cannot be normalized."""


class DimensionMismatchError(PipelineError):
    pass


class InvalidFpsError(InvalidConfigError):
    pass


class InconsistentProfilesError(InvalidConfigError):
    """Latency profiles whose throughput does not decrease with depth."""


class MissingPayloadError(PipelineError):
    """Detection event carries neither a crop reference nor an embedding."""


class InvalidStateError(PipelineError):
    """Track stepped outside its probation window."""


class UnknownIdError(PipelineError):
    pass


class GalleryFullError(PipelineError):
    pass


class OutOfOrderFrameError(PipelineError):
    pass


class EmptyDenominatorError(PipelineError):
    pass


class FrameMismatchError(PipelineError):
    pass


class ParseError(PipelineError):
    """Malformed input file; carries the 1-based offending line number."""

    kind = "parse"

    def __init__(self, message, line=None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


class UnknownSessionError(PipelineError):
    pass
