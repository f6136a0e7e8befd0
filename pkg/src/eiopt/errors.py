"""Exception types raised across the package."""


class KernelConfigError(ValueError):
    """Unsupported or inconsistent kernel configuration."""


class DuplicatePointError(ValueError):
    """Two design points coincide within the duplicate tolerance."""

    def __init__(self, i, j, message=None):
        self.pair = (i, j)
        super().__init__(message or f"design points {i} and {j} coincide")


class SingularDesignError(RuntimeError):
    """The correlation matrix could not be factorized, even with jitter."""


class ProtocolError(RuntimeError):
    """A strategy was driven out of order."""
