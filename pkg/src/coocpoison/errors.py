"""Exception types shared across the toolkit."""


class ConfigError(ValueError):
    """Inconsistent or invalid configuration (mismatched matrices, bad params)."""


class ParseError(ValueError):
    """Malformed input file. Carries the byte offset where parsing failed."""

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class SpecError(ValueError):
    """Invalid attack specification."""


class QueryError(KeyError):
    """Lookup of a word or id that does not exist."""


class TrainingError(RuntimeError):
    """Embedding training diverged. Carries the epoch index."""

    def __init__(self, message, epoch=None):
        super().__init__(message)
        self.epoch = epoch


class ApplicationError(ValueError):
    """A corpus edit could not be applied (e.g. out-of-range flip)."""


class ScoringError(ValueError):
    """Perplexity scoring failed (e.g. missing lines in an external score file)."""


class StatError(ValueError):
    """Not enough data for a statistical computation."""
