"""Exception types shared across the pipeline."""


class RespewsError(Exception):
    """Base class for all package errors."""


class ConfigError(RespewsError):
    """Invalid or inconsistent configuration."""


class DomainError(RespewsError, ValueError):
    """Input outside the mathematical domain of an operation."""


class CohortLoadError(RespewsError):
    """Stay files could not be parsed.

    Carries (line_number, message) pairs for every offending row of the
    file that triggered the failure.
    """

    def __init__(self, path, row_errors):
        self.path = str(path)
        self.row_errors = list(row_errors)
        lines = "; ".join(f"line {n}: {msg}" for n, msg in self.row_errors)
        super().__init__(f"{self.path}: {lines}")


class SchemaMismatchError(RespewsError):
    """Feature matrix schema differs from the one the model was trained on."""


class TrainingError(RespewsError):
    """Model training could not proceed (bad labels, NaN loss, ...)."""


class ArtifactError(RespewsError):
    """A pipeline stage is missing or refuses an input artifact."""
