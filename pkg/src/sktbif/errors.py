"""Exception types shared across the package."""


class SktbifError(Exception):
    """Base class for all package-specific failures."""


class SingularDenominatorError(SktbifError):
    """A closed-form expression hit a (near-)zero denominator."""


class NoCrossingError(SktbifError):
    """Two neutral stability curves do not cross in the scanned window."""


class ResonanceError(SktbifError):
    """Second-order solve is singular: the doubled mode is itself critical."""


class DegenerateKernelError(SktbifError):
    """Both rows of the critical matrix degenerate; kernel vector undefined."""


class NonconvergenceError(SktbifError):
    """Newton iteration failed to reach tolerance."""

    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class SingularJacobianError(SktbifError):
    """Linear solve failed or produced a step consistent with a singular matrix."""


class StepCollapseError(SktbifError):
    """Arclength step shrank to the minimum without an accepted point."""


class SeedNonconvergenceError(SktbifError):
    """Branch switching could not converge any seeded starting point."""


class ConfigError(SktbifError):
    """Run configuration is malformed or violates the schema."""
