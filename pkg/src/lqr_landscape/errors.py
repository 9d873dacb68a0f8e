"""Exception hierarchy shared by every module."""


class LQRError(Exception):
    """Base class for all errors raised by this package."""


class DimensionError(LQRError, ValueError):
    pass


class PlantError(LQRError, ValueError):
    """Problem data violates a definiteness or finiteness invariant."""


class StabilityError(LQRError):
    """A matrix (usually A + BK) is not Hurwitz."""

    def __init__(self, message, abscissa=None):
        super().__init__(message)
        self.abscissa = abscissa


class AssumptionError(LQRError):
    """Stabilizability/detectability or weight definiteness fails."""


class NumericalError(LQRError):
    pass


class IllConditionedError(NumericalError):
    """Hamiltonian eigenvalues too close to the imaginary axis."""


class SamplingError(LQRError):
    pass


class SingularLiftError(LQRError):
    """The closed-loop Gramian X is singular, so the convex lift is undefined."""
