"""Exception types shared across the package."""


class PeriodDetectionError(RuntimeError):
    """No probing scale produced a usable period estimate."""


class IngestionError(RuntimeError):
    """An input file could not be read or parsed."""
