"""Exception types shared across the package."""


class ConfigError(ValueError):
    """A config file or CLI argument is malformed or out of range."""


class SolverError(RuntimeError):
    """A numerical solve failed (singular system, damping floor, blow-up)."""


class FitError(RuntimeError):
    """A least-squares fit could not be performed reliably."""
