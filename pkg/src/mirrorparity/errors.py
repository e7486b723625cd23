"""Exception hierarchy shared by the simulator modules."""


class MirrorParityError(Exception):
    """Base class for all simulator errors."""


class InvalidDimensionError(MirrorParityError, ValueError):
    pass


class InvalidArgumentError(MirrorParityError, ValueError):
    pass


class InvalidStateError(MirrorParityError, ValueError):
    """A density operator failed a Hermiticity, trace or positivity check."""


class TruncationError(MirrorParityError):
    """The truncated Fock basis is too small for the requested accuracy."""

    def __init__(self, message, required_dim=None):
        super().__init__(message)
        self.required_dim = required_dim


class ConvergenceError(MirrorParityError):
    pass


class EmptyDataSetError(MirrorParityError):
    """Post-selection left (numerically) nothing in the data set."""


class ConfigError(MirrorParityError, ValueError):
    pass
