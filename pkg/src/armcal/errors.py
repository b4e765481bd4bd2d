"""Exception types shared across the calibration toolkit."""


class CalibrationError(Exception):
    """Base class for all armcal errors."""


class InvalidArgumentError(CalibrationError, ValueError):
    """An argument violates a documented precondition."""


class ParseError(CalibrationError, ValueError):
    """A file could not be parsed; message names the offending location."""


class NumericalFailureError(CalibrationError, RuntimeError):
    """A numerical operation broke down (singular matrix, underflow, ...)."""


class RankDeficiencyError(NumericalFailureError):
    """Normal equations are singular; advise damping > 0."""


class DegenerateWeightsError(NumericalFailureError):
    """All particle weights vanished; advise a larger weighting covariance."""


class DivergedError(NumericalFailureError):
    """An iterative fit diverged; advise a smaller learning rate."""
