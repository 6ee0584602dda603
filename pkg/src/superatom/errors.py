"""Exception types shared across the package."""


class SuperatomError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(SuperatomError):
    """Invalid user input: bad geometry, drive, or run configuration."""


class NumericalError(SuperatomError):
    """A solver failed: singular system, non-convergent fit, or unstable step."""


class ResourceCapError(SuperatomError):
    """Requested problem size exceeds the supported dense-solver limits."""
