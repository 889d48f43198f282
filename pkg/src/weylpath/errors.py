"""Exception hierarchy shared by all weylpath modules."""


class WeylPathError(Exception):
    """Base class for all errors raised by this package."""


class HamiltonianFormatError(WeylPathError):
    """A Hamiltonian description (JSON file or term map) is malformed."""


class TailTooLarge(WeylPathError):
    """A truncated Fock expansion leaves too much probability beyond the cutoff."""

    def __init__(self, tail: float, threshold: float, cutoff: int):
        self.tail = tail
        self.threshold = threshold
        self.cutoff = cutoff
        super().__init__(
            f"truncated tail mass {tail:.3e} exceeds threshold {threshold:.3e} "
            f"at cutoff {cutoff}; increase the cutoff"
        )


class NonConverged(WeylPathError):
    """A cutoff- or step-refinement check failed to stabilise."""


class QuadratureNotConverged(WeylPathError):
    """Refining a quadrature grid changed the result by more than the tolerance."""


class DimensionTooLarge(WeylPathError):
    """A brute-force integral was requested in too many dimensions."""


class NoConvergence(WeylPathError):
    """Newton iteration for a boundary-value trajectory did not converge."""


class StepTooLarge(WeylPathError):
    """A fixed-step integration failed its step-halving error estimate."""


class SingularMonodromy(WeylPathError):
    """The linearised flow is (numerically) singular: caustic encountered."""


class SingularMatrix(WeylPathError):
    """Pivoted elimination hit a negligible pivot."""


class MarginTooSmall(WeylPathError):
    """A grid does not leave enough margin for a convolution kernel."""


class CausticWarning(UserWarning):
    """Emitted when a trajectory passes close to a caustic."""
