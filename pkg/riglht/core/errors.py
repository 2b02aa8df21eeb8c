class RiglhtError(Exception):
    """Base class for every error raised by the riglht library."""


class InvalidDimensionError(RiglhtError, ValueError):
    """Vector, matrix or group dimensions do not agree."""


class InvalidInputError(RiglhtError, ValueError):
    """An argument is outside the domain an operation accepts."""


class RankDeficiencyError(RiglhtError, ValueError):
    """A contrast or matrix that must be full rank is (numerically) singular."""


class SampleTooSmallError(RiglhtError):
    """A group has fewer observations than the trace estimators require."""

    def __init__(self, group: str | int, size: int, minimum: int = 4):
        self.group = group
        self.size = size
        self.minimum = minimum
        super().__init__(
            f"group '{group}' has {size} observations; at least {minimum} are required"
        )


class ConfigError(RiglhtError):
    """A run configuration is inconsistent or fails schema validation."""


class DatasetError(RiglhtError):
    """A grouped CSV dataset cannot be parsed or fails validation."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
