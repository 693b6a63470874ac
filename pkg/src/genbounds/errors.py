"""Exceptions shared across the package."""


class GenBoundsError(Exception):
    """Base class for package-specific failures."""


class ConfigError(GenBoundsError):
    """Experiment configuration could not be parsed or is inconsistent."""


class NonConvergenceError(GenBoundsError):
    """An iterative solver exhausted its iteration budget."""


class InfeasibleConstraintError(GenBoundsError, ValueError):
    """A requested constraint set is empty and was not silently clamped."""


class ValidationFailure(GenBoundsError):
    """A validation suite found a violated inequality."""
