"""Exception types shared across the package."""


class OmitsimError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(OmitsimError):
    """Config document is malformed, incomplete, or carries unknown keys."""


class NonPositiveParameter(OmitsimError):
    """A physical parameter that must be strictly positive is not."""

    def __init__(self, name, value=None):
        self.name = name
        self.value = value
        msg = f"parameter {name!r} must be strictly positive"
        if value is not None:
            msg += f" (got {value!r})"
        super().__init__(msg)


class CoulombOverstrong(OmitsimError):
    """Coulomb coupling so strong the coupled spring system has no stable
    static equilibrium (effective spring denominator <= 0)."""


class InvalidParams(OmitsimError):
    """Model parameters violate an invariant required by the operation."""


class NoConvergence(OmitsimError):
    """Root polishing failed to reach the requested residual."""


class AmbiguousBranch(OmitsimError):
    """Multiple stable steady-state branches exist; caller must pick one."""


class PolePassage(OmitsimError):
    """Probe detuning hit an undamped mechanical pole (gamma2 = 0)."""


class SingularA(OmitsimError):
    """Mechanical response denominator underflowed to (numerically) zero."""


class SingularDenominator(OmitsimError):
    """Probe-response denominator vanished; parametric pole or instability."""

    def __init__(self, delta, denominator):
        self.delta = delta
        self.denominator = denominator
        super().__init__(
            f"response denominator vanished at delta={delta!r} "
            f"(denominator={denominator!r})")


class StepTooLarge(OmitsimError):
    """Finite-difference step too coarse for the local spectral structure."""


class NoTransparencyWindow(OmitsimError):
    """No absorption minimum below the transparency threshold in the window."""


class StepFailure(OmitsimError):
    """Adaptive integrator could not meet its tolerance."""


class Divergence(OmitsimError):
    """Trajectory norm blew up; the integrated state is unstable."""


class InsufficientSpan(OmitsimError):
    """Trajectory does not cover enough beat periods for demodulation."""


class BudgetExceeded(OmitsimError):
    """Sweep plan requests more grid points than the configured budget."""


class ShapeMismatch(OmitsimError):
    """Two run records do not have comparable structure."""
