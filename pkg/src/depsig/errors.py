"""Exception types shared across the package."""


class DepsigError(Exception):
    """Base class for all package errors."""


class CorpusError(DepsigError):
    """Raised for unusable corpus input (missing file, duplicate ids, empty result)."""


class LexiconFormatError(DepsigError):
    """Raised when a lexicon file violates its format contract.

    Carries the 1-based line number where parsing failed (0 when the
    problem is file-level, e.g. an empty file).
    """

    def __init__(self, message, line=0):
        super().__init__(f"line {line}: {message}" if line else message)
        self.line = line


class FeatureError(DepsigError):
    """Raised for feature-extraction contract violations."""


class ModelError(DepsigError):
    """Raised for invalid model inputs or fit failures."""


class EvaluationError(DepsigError):
    """Raised for invalid evaluation inputs (constant vectors, bad folds)."""


class ConfigError(DepsigError):
    """Raised for invalid or unknown pipeline configuration."""


class PipelineError(DepsigError):
    """Raised when a pipeline stage fails; names the stage and the cause."""

    def __init__(self, stage, cause):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause
