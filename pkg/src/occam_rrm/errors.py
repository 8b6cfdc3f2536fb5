"""Exception types shared across the package."""


class OccamRrmError(Exception):
    """Base class for all package errors."""


class ConfigError(OccamRrmError):
    """Invalid configuration (bad field value, unknown discriminator, ...)."""


class InvalidActionError(OccamRrmError):
    """An action outside the environment's action space was applied."""


class NotTractableError(OccamRrmError):
    """Exact MDP extraction requested on a non-enumerable environment."""


class MissingDiagnosticError(OccamRrmError):
    """A metrics profile needs a diagnostic key that logs do not carry."""


class NumericalError(OccamRrmError):
    """A linear-algebra step failed in a way valid inputs should preclude."""


class GpNumericalError(NumericalError):
    """Gram matrix numerically singular even after jitter."""


class PlotDataError(OccamRrmError):
    """A plot kind needs a series the summary does not contain."""
