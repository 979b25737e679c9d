"""Exception hierarchy shared by every module of the package."""


class DFIGError(Exception):
    """Base class for all errors raised by dfig_reshape."""


class InvalidParameterError(DFIGError, ValueError):
    """A parameter record violates one of its invariants."""


class NoEquilibriumError(DFIGError):
    """The static machine + grid equations have no solution.

    ``residual`` carries the last residual (for the closed-form solve this is
    the negative discriminant of the PCC voltage equation).
    """

    def __init__(self, message, residual=float("nan")):
        super().__init__(message)
        self.residual = residual


class InvalidOperatingPointError(DFIGError, ValueError):
    pass


class PoleError(DFIGError, ZeroDivisionError):
    """Transfer function evaluated at (or numerically on top of) a pole."""

    def __init__(self, message, omega=None, entry=None):
        super().__init__(message)
        self.omega = omega
        self.entry = entry


class SingularMatrixError(DFIGError, ArithmeticError):
    pass


class FrameMismatchError(DFIGError, ValueError):
    pass


class MarginalCaseError(DFIGError):
    """A Nyquist locus passes too close to the critical point to count."""


class DegenerateReductionError(DFIGError, ArithmeticError):
    pass


class UnstableSubsystemError(DFIGError):
    """An open-loop subsystem has right-half-plane poles, so a bare
    encirclement count does not decide closed-loop stability."""


class ScanConditioningError(DFIGError):
    pass


class ResolutionError(DFIGError, ValueError):
    pass


class ConfigError(DFIGError, ValueError):
    pass
