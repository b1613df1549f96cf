"""Exception types shared across the package."""


class KdvLabError(Exception):
    """Base class for all package errors."""


class ValidationError(KdvLabError):
    """Invalid configuration or argument values."""


class BandEmptyError(KdvLabError):
    """A spectral projection band contains no grid modes."""


class MultiplierDomainError(KdvLabError):
    """A Fourier multiplier is non-finite at a wavenumber carrying mass."""


class NonzeroMeanError(KdvLabError):
    """An operation requiring zero-mean input received a field with mean."""


class ContaminationError(KdvLabError):
    """Boundary mass exceeds the clean-window threshold; position-space
    diagnostics on the periodic box are no longer meaningful."""


class BlowupError(KdvLabError):
    """Non-finite values appeared during time integration.

    Carries the last good state in ``last_state`` when available.
    """

    def __init__(self, message, last_state=None):
        super().__init__(message)
        self.last_state = last_state


class ResolutionError(KdvLabError):
    """Requested quantity is not representable at the current resolution."""


class SolverError(KdvLabError):
    """Newton/continuation failure in a boundary-value solve."""

    def __init__(self, message, last_iterate=None):
        super().__init__(message)
        self.last_iterate = last_iterate
