"""Exception hierarchy shared by all solver modules."""


class SiegertError(Exception):
    """Base class for every error raised by this package."""


class NoConvergence(SiegertError):
    """An iterative root search did not reach its tolerance."""


class EmptyWindow(SiegertError):
    """A search window contains no admissible points."""


class AtPole(SiegertError):
    """The requested wave number sits on a pole of the S matrix."""


class SegmentOutOfGrid(SiegertError):
    """The integration segment [-L, L] is not covered by the sampled grid."""


class NotARoot(SiegertError):
    """A state passed as an eigenstate fails its defining equation."""


class NotDecaying(SiegertError):
    """The operation needs a decaying (resonant) state."""


class NonPositiveKappa(SiegertError):
    """The decay part of the wave number must be strictly positive."""


class NoConvergenceQR(SiegertError):
    """The dense eigensolver exceeded its iteration budget."""


class NotConverged(SiegertError):
    """Self-consistent iteration stopped without meeting its tolerance.

    The partial trace is attached so callers can inspect the postulates.
    """

    def __init__(self, message, trace):
        super().__init__(message)
        self.trace = trace


class OscillationDetected(NotConverged):
    """Self-consistent iteration entered a cycle of period two or more."""


class UnstableStep(SiegertError):
    """Time integration exceeded the overflow guard."""


class DimensionMismatch(SiegertError):
    """Initial data does not match the model dimension."""


class Overflow(SiegertError):
    """Asymptotic initialization would overflow double precision."""


class BadPotential(SiegertError):
    """The radial potential does not decay fast enough at the outer radius."""


class ExtrapolationUnstable(SiegertError):
    """Inner samples are not in the asymptotic r -> 0 regime."""


class ConfigError(SiegertError):
    """Invalid or unknown configuration keys."""
