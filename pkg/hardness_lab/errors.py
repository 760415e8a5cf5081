"""Exceptions raised by the lab's numerical modules."""


class LabError(Exception):
    """Base class for every error raised by hardness_lab."""


class DimensionError(LabError, ValueError):
    """Array shapes or dimensions do not agree."""


class InvalidParameterError(LabError, ValueError):
    """A parameter is outside its admissible range."""


class UnsupportedShapeError(LabError):
    """The periodic function cannot be represented in the requested form."""


class UnsupportedError(LabError):
    """No closed form is available for this configuration."""


class RankDeficientError(LabError, ValueError):
    """A matrix that must have full column rank does not."""


class ConfigError(LabError):
    """An experiment configuration is missing fields or malformed."""


class DivergenceError(LabError):
    """An iterate became non-finite."""

    def __init__(self, iteration: int, message: str = ''):
        self.iteration = iteration
        super().__init__(message or f"non-finite iterate at iteration {iteration}")
