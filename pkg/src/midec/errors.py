"""Exception types raised across the package."""


class MidecError(Exception):
    """Base class for all package errors."""


class DomainError(MidecError, ValueError):
    """An argument lies outside the domain of a formula."""


class CapabilityError(MidecError, NotImplementedError):
    """The requested (generator, dimension) combination is not supported."""


class ChainFailure(MidecError, RuntimeError):
    """A Markov chain produced a non-finite state or gradient.

    The offending state is kept on ``state`` for inspection.
    """

    def __init__(self, message, state=None):
        super().__init__(message)
        self.state = state


class OptimizationError(MidecError, RuntimeError):
    """An inner minimisation did not converge."""


class ConfigError(MidecError, ValueError):
    """An experiment configuration failed to load or validate."""
