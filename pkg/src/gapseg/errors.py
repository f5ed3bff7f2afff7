"""Exception hierarchy shared across the package."""


class GapsegError(Exception):
    """Base class for all errors raised by this package."""


class ShapeError(GapsegError):
    """Tensor shapes are incompatible with the requested operation."""


class ContractError(GapsegError):
    """A caller violated a documented precondition."""


class ConfigError(GapsegError):
    """Configuration values are inconsistent or out of range."""


class CorpusError(GapsegError):
    """Input text could not be ingested (bad encoding, malformed line)."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class TrainingError(GapsegError):
    """Training hit a non-recoverable numeric problem."""


class DecodeError(GapsegError):
    """No valid label sequence could be produced or verified."""


class AlignmentError(GapsegError):
    """Two sentence lists disagree on their character content."""


class CheckpointError(GapsegError):
    """A checkpoint stream is damaged or inconsistent with its config."""
