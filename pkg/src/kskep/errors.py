"""Exception hierarchy for domain and numerical failures."""


class KSError(Exception):
    """Base class for all kskep errors."""


class CollisionError(KSError):
    """State at (or numerically below) the gravitational singularity r = 0."""


class PoleError(KSError):
    """Operation undefined on the antipodal branch x/|x| = -c of the chart."""


class GaugeUndefined(KSError):
    """Fiber gauge cannot be determined for this quaternion/chart pair."""


class DegenerateState(KSError):
    """State degenerate for the requested operation (e.g. v.v = 0)."""


class UnboundOrbit(KSError):
    """Operation requires a bound orbit (oscillator frequency would not be real)."""


class ConstraintViolation(KSError):
    """KS phase violates the bilinear constraint J.c = 0 beyond tolerance."""


class StepLimitExceeded(KSError):
    """Fixed-step integration would exceed the configured step budget."""


class NoConvergence(KSError):
    """Iterative solver failed to reach its residual tolerance."""
