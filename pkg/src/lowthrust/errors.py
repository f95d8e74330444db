"""Exception types shared across the toolkit."""


class LowThrustError(Exception):
    """Base class for all toolkit errors."""


class DegenerateStateError(LowThrustError):
    """State is rectilinear/parabolic or otherwise outside a map's domain."""


class DegenerateDirectionError(LowThrustError):
    """Thrust direction undefined: ||M^T lambda_x|| below threshold."""


class ZeroMultiplierError(LowThrustError):
    """Scalar cost multiplier too close to zero for the control law."""


class CollinearBoundaryError(LowThrustError):
    """Departure and arrival positions are (anti-)parallel."""


class LambertNoSolutionError(LowThrustError):
    """Requested transfer time below the multi-revolution minimum."""


class LambertNoConvergenceError(LowThrustError):
    """Time-of-flight root iteration failed to converge."""


class NoConvergenceError(LowThrustError):
    """Nonlinear boundary-value solve did not reach the residual tolerance."""


class IntegrationFailureError(LowThrustError):
    """Adaptive integrator step size underflowed (stiffness or blow-up)."""


class TauOutOfRangeError(LowThrustError):
    """Truncation time outside the open interval (t0, tf]."""


class LayoutMismatchError(LowThrustError):
    """Feature vector layout does not match the model descriptor."""


class ModelFormatError(LowThrustError):
    """Model or dataset file failed version or checksum validation."""
