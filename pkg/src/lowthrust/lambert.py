"""Multi-revolution Lambert solver and two-impulse reference features."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import _kernels as _k
from .errors import (CollinearBoundaryError, LambertNoConvergenceError,
                     LambertNoSolutionError)
from .problem import BoundaryConditions


class Branch(Enum):
    SHORT_PERIOD = 0
    LONG_PERIOD = 1


class Direction(Enum):
    PROGRADE = 0
    RETROGRADE = 1


@dataclass(frozen=True)
class LambertQuery:
    r1: np.ndarray
    r2: np.ndarray
    dt: float
    mu: float
    revs: int = 0
    branch: Branch = Branch.SHORT_PERIOD
    direction: Direction = Direction.PROGRADE

    def __post_init__(self):
        object.__setattr__(self, "r1", np.asarray(self.r1, dtype=float).reshape(3))
        object.__setattr__(self, "r2", np.asarray(self.r2, dtype=float).reshape(3))
        if not self.dt > 0.0:
            raise ValueError("transfer time must be positive")
        if self.revs < 0:
            raise ValueError("revolution count must be non-negative")


@dataclass(frozen=True)
class LambertSolution:
    v1_required: np.ndarray
    v2_arrival: np.ndarray
    transfer_e: float
    transfer_nu1: float


def _raise_for_status(st: int) -> None:
    if st == _k.NO_SOLUTION:
        raise LambertNoSolutionError("transfer time below the multi-rev minimum")
    if st == _k.DEGENERATE:
        raise CollinearBoundaryError("r1 and r2 are (anti-)parallel")
    if st != _k.OK:
        raise LambertNoConvergenceError("time-of-flight iteration failed")


def solve_lambert(q: LambertQuery) -> LambertSolution:
    """Solve the two-impulse boundary problem for the given query.

    The transfer angle is measured about +z (counterclockwise for
    prograde).  For revs >= 1 the requested period branch is returned;
    transfer times below the minimum raise LambertNoSolutionError.
    """
    v1 = np.empty(3)
    v2 = np.empty(3)
    st = _k.lambert_universal(q.r1, q.r2, q.dt, q.mu, q.revs, q.branch.value,
                              q.direction.value, v1, v2)
    _raise_for_status(st)
    coe = np.empty(6)
    st = _k.cart_to_coe(q.r1, v1, q.mu, coe)
    if st != _k.OK:
        e_t, nu1 = 0.0, 0.0
    else:
        e_t, nu1 = float(coe[1]), float(coe[5])
    return LambertSolution(v1_required=v1, v2_arrival=v2,
                           transfer_e=e_t, transfer_nu1=nu1)


def lambert_deltav_features(bc: BoundaryConditions, mu: float, revs: int = 0
                            ) -> tuple[np.ndarray, np.ndarray, float, float]:
    """Velocity increments of the cheapest feasible Lambert branch.

    dv1 = v1_required - v1, dv2 = v2 - v2_arrival; for revs >= 1 both
    period branches are attempted and the lower |dv1|+|dv2| is kept.
    Returns (dv1, dv2, transfer_e, transfer_nu1).
    """
    v1 = np.empty(3)
    v2 = np.empty(3)
    st = _k.lambert_best_branch(bc.r1, bc.r2, bc.dt, mu, revs, v1, v2,
                                bc.v1, bc.v2)
    _raise_for_status(st)
    coe = np.empty(6)
    st = _k.cart_to_coe(bc.r1, v1, mu, coe)
    e_t, nu1 = (float(coe[1]), float(coe[5])) if st == _k.OK else (0.0, 0.0)
    return v1 - bc.v1, bc.v2 - v2, e_t, nu1


def minimum_multirev_time(r1, r2, mu: float, revs: int,
                          direction: Direction = Direction.PROGRADE) -> float:
    """Smallest transfer time for which the revs-revolution problem is solvable."""
    if revs < 1:
        return 0.0
    r1 = np.asarray(r1, dtype=float).reshape(3)
    r2 = np.asarray(r2, dtype=float).reshape(3)
    lo = 2.0 * np.pi * revs * (min(np.linalg.norm(r1), np.linalg.norm(r2)) ** 1.5) / np.sqrt(mu) * 0.05
    hi = lo
    v1 = np.empty(3)
    v2 = np.empty(3)
    # expand until solvable, then bisect the feasibility boundary
    for _ in range(80):
        if _k.lambert_universal(r1, r2, hi, mu, revs, 0, direction.value, v1, v2) == _k.OK:
            break
        hi *= 1.6
    else:
        raise LambertNoConvergenceError("could not bracket the minimum time")
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if _k.lambert_universal(r1, r2, mid, mu, revs, 0, direction.value, v1, v2) == _k.OK:
            hi = mid
        else:
            lo = mid
    return hi
