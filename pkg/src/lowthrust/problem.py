"""Boundary-condition and propulsion containers shared across the toolkit."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .constants import G0


@dataclass(frozen=True)
class BoundaryConditions:
    """Departure/arrival position-velocity pair and a transfer time.

    `dt` is the fixed transfer time for fuel-optimal problems; for
    time-optimal problems it anchors the arrival state on its orbit (the
    target passes through (r2, v2) at t0 + dt) and serves as the initial
    guess for the free final time.  `t0` is bookkeeping only.
    """

    r1: np.ndarray
    v1: np.ndarray
    r2: np.ndarray
    v2: np.ndarray
    dt: float
    t0: float = 0.0

    def __post_init__(self):
        for name in ("r1", "v1", "r2", "v2"):
            vec = np.asarray(getattr(self, name), dtype=float).reshape(3)
            object.__setattr__(self, name, vec)
            if not np.all(np.isfinite(vec)):
                raise ValueError(f"{name} has non-finite components")
        if not self.dt > 0.0:
            raise ValueError("transfer time must be positive")

    def rotated(self, R: np.ndarray) -> "BoundaryConditions":
        """Apply a global rotation to all four boundary vectors."""
        return replace(self, r1=R @ self.r1, v1=R @ self.v1,
                       r2=R @ self.r2, v2=R @ self.v2)

    def scaled(self, length: float, time: float) -> "BoundaryConditions":
        """Rescale lengths and times (velocities scale as length/time)."""
        vel = length / time
        return replace(self, r1=self.r1 * length, v1=self.v1 * vel,
                       r2=self.r2 * length, v2=self.v2 * vel,
                       dt=self.dt * time, t0=self.t0 * time)


@dataclass(frozen=True)
class PropulsionParams:
    """Maximum thrust, specific impulse, initial mass and central-body mu."""

    t_max: float  # N
    isp: float    # s
    m0: float     # kg
    mu: float     # m^3/s^2
    g0: float = G0

    def __post_init__(self):
        for name in ("t_max", "isp", "m0", "mu", "g0"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"{name} must be positive")

    @property
    def v_exhaust(self) -> float:
        return self.isp * self.g0

    @property
    def a_s(self) -> float:
        """Initial thrust acceleration T_max/m0."""
        return self.t_max / self.m0
