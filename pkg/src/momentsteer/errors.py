"""Error and warning types shared across the package."""


class ConfigError(ValueError):
    """A scenario or constructor argument is outside its documented range."""


class SolverError(RuntimeError):
    """A numerical solve failed (non-finite state, singular matching system, ...)."""


class SolverWarning(UserWarning):
    """A solve succeeded but in a degraded regime (ill conditioning, fallback path)."""
