"""Exception types shared across the package."""


class NumericalError(RuntimeError):
    """Raised when a solver or sampler diverges or a system is too ill-conditioned."""


class ConfigError(Exception):
    """Raised for malformed or inconsistent experiment configuration."""
