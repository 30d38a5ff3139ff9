"""Exception types raised across the package."""


class InvalidParametersError(ValueError):
    """A physical or protocol parameter violates its documented range."""


class DegenerateInputsError(ValueError):
    """A statistical bound was requested on an empty or degenerate sample."""


class DegenerateDecoyError(ValueError):
    """The decoy intensity set cannot separate photon-number contributions."""


class DegenerateBlockError(ValueError):
    """An observed block has no certifiable secure events."""


class NoPositiveKeyError(RuntimeError):
    """No channel loss yields a positive key for the requested configuration."""


class NotConvergedError(RuntimeError):
    """An asymptotic or iterative evaluation failed its convergence check."""


class ConfigurationError(ValueError):
    """A run configuration is malformed or inconsistent."""
