"""Exception types shared across the pipeline."""


class RcgError(Exception):
    """Base class for all package errors."""


class DataError(RcgError, ValueError):
    """Bad or unsupported input data (files, datasets, configs)."""


class StageError(RcgError):
    """A pipeline stage failed; carries the stage name and offending item."""

    def __init__(self, stage: str, message: str, item: str | None = None):
        self.stage = stage
        self.item = item
        where = f" on {item}" if item else ""
        super().__init__(f"stage '{stage}' failed{where}: {message}")


class InvariantError(RcgError):
    """An internal consistency check failed."""
