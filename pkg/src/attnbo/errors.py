"""Exception hierarchy shared by every subpackage."""


class AttnBoError(Exception):
    """Base class for all errors raised by this package."""


class ConfigurationError(AttnBoError, ValueError):
    """Shapes, dimensions or settings are inconsistent."""


class PreconditionError(AttnBoError, ValueError):
    """An operation was called with inputs outside its contract."""


class ModelInvariantError(AttnBoError, ValueError):
    """A model quantity violated a structural invariant (e.g. a nonpositive std)."""


class TrainingError(AttnBoError, RuntimeError):
    """Optimization produced a non-finite loss or gradient."""

    def __init__(self, message, *, tensor=None, step=None):
        super().__init__(message)
        self.tensor = tensor
        self.step = step


class SimulationError(AttnBoError, RuntimeError):
    """The twin integrator produced a non-finite state."""

    def __init__(self, message, *, time_min=None):
        super().__init__(message)
        self.time_min = time_min


class DomainCoveredError(AttnBoError, RuntimeError):
    """The exclusion balls leave (almost) nothing of the search box to sample."""


class EvaluationError(AttnBoError, RuntimeError):
    """Every objective evaluation of a batch failed."""
