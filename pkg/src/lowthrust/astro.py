"""Two-body astrodynamics in modified equinoctial elements.

State representations, conversions, universal-variable Kepler propagation,
and the thrust/gravity matrices of the equinoctial dynamics together with
their analytic partial derivatives.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels as _k
from .errors import DegenerateStateError, NoConvergenceError

TWO_PI = 2.0 * math.pi


def wrap_angle(theta: float) -> float:
    """Reduce an angle to [0, 2*pi)."""
    out = math.fmod(theta, TWO_PI)
    return out + TWO_PI if out < 0.0 else out


@dataclass(frozen=True)
class CartesianState:
    r: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "r", np.asarray(self.r, dtype=float).reshape(3))
        object.__setattr__(self, "v", np.asarray(self.v, dtype=float).reshape(3))
        if not (np.all(np.isfinite(self.r)) and np.all(np.isfinite(self.v))):
            raise ValueError("non-finite state components")
        if np.linalg.norm(self.r) == 0.0:
            raise ValueError("position vector has zero norm")


@dataclass(frozen=True)
class ClassicalElements:
    """(a, e, i, raan, argp, nu); angles in radians, stored in [0, 2*pi)."""

    a: float
    e: float
    i: float
    raan: float
    argp: float
    nu: float

    def __post_init__(self):
        if self.e < 0.0:
            raise ValueError("eccentricity must be non-negative")
        if self.e < 1.0 and self.a <= 0.0:
            raise ValueError("elliptic elements require a > 0")
        for name in ("i", "raan", "argp", "nu"):
            object.__setattr__(self, name, wrap_angle(getattr(self, name)))


@dataclass(frozen=True)
class MeeState:
    """Modified equinoctial elements (p, f, g, h, k, L)."""

    p: float
    f: float
    g: float
    h: float
    k: float
    L: float

    def __post_init__(self):
        if not self.p > 0.0:
            raise ValueError("semilatus rectum must be positive")

    def as_array(self) -> np.ndarray:
        return np.array([self.p, self.f, self.g, self.h, self.k, self.L])

    @classmethod
    def from_array(cls, x) -> "MeeState":
        return cls(*np.asarray(x, dtype=float))

    @property
    def w(self) -> float:
        return 1.0 + self.f * math.cos(self.L) + self.g * math.sin(self.L)


@dataclass(frozen=True)
class MeeLocals:
    """Recurring scalars w, s^2, A, B, C of the equinoctial expressions."""

    w: float
    s2: float
    A: float
    B: float
    C: float


def mee_locals(mee: MeeState) -> MeeLocals:
    w, s2, av, bv, cv, _, _ = _k.mee_locals(mee.as_array())
    return MeeLocals(w, s2, av, bv, cv)


# ---------------------------------------------------------------------------
# conversions
# ---------------------------------------------------------------------------
def coe_to_mee(coe: ClassicalElements) -> MeeState:
    """Classical elements to modified equinoctial elements.

    Rejects parabolic/degenerate sets with p = a(1 - e^2) <= 0.
    """
    p = coe.a * (1.0 - coe.e**2)
    if not p > 0.0:
        raise DegenerateStateError(f"semilatus rectum {p} <= 0")
    lonper = coe.argp + coe.raan
    ti2 = math.tan(coe.i / 2.0)
    return MeeState(
        p=p,
        f=coe.e * math.cos(lonper),
        g=coe.e * math.sin(lonper),
        h=ti2 * math.cos(coe.raan),
        k=ti2 * math.sin(coe.raan),
        L=wrap_angle(lonper + coe.nu),
    )


def mee_to_coe(mee: MeeState) -> ClassicalElements:
    """Inverse of `coe_to_mee`."""
    e = math.hypot(mee.f, mee.g)
    if e >= 1.0:
        raise DegenerateStateError("non-elliptic state has no classical a > 0")
    ti2 = math.hypot(mee.h, mee.k)
    inc = 2.0 * math.atan(ti2)
    raan = math.atan2(mee.k, mee.h) if ti2 > 0.0 else 0.0
    lonper = math.atan2(mee.g, mee.f) if e > 0.0 else raan
    return ClassicalElements(
        a=mee.p / (1.0 - e**2),
        e=e,
        i=inc,
        raan=raan,
        argp=wrap_angle(lonper - raan),
        nu=wrap_angle(mee.L - lonper),
    )


def mee_to_cartesian(mee: MeeState, mu: float) -> CartesianState:
    r = np.empty(3)
    v = np.empty(3)
    _k.mee_to_cart(mee.as_array(), mu, r, v)
    return CartesianState(r, v)


def cartesian_to_mee(state: CartesianState, mu: float) -> MeeState:
    """Cartesian to MEE; rejects rectilinear and retrograde-equatorial states."""
    out = np.empty(6)
    st = _k.cart_to_mee(state.r, state.v, mu, out)
    if st != _k.OK:
        raise DegenerateStateError("state is rectilinear or at the i = pi singularity")
    return MeeState.from_array(out)


def cartesian_to_coe(state: CartesianState, mu: float) -> ClassicalElements:
    out = np.empty(6)
    st = _k.cart_to_coe(state.r, state.v, mu, out)
    if st != _k.OK:
        raise DegenerateStateError("degenerate or parabolic state")
    return ClassicalElements(*out)


# ---------------------------------------------------------------------------
# propagation
# ---------------------------------------------------------------------------
def kepler_propagate(state: CartesianState, dt: float, mu: float,
                     tol: float = 1e-12, maxiter: int = 50) -> CartesianState:
    """Propagate a two-body state by `dt` using universal variables.

    Handles elliptic and hyperbolic orbits uniformly.  Raises
    NoConvergenceError if the Newton iteration on the universal anomaly
    does not settle within `maxiter` iterations.
    """
    r = np.empty(3)
    v = np.empty(3)
    st = _k.kepler_universal(state.r, state.v, dt, mu, r, v, tol, maxiter)
    if st != _k.OK:
        raise NoConvergenceError("universal-variable iteration failed")
    return CartesianState(r, v)


def specific_energy(state: CartesianState, mu: float) -> float:
    return 0.5 * float(state.v @ state.v) - mu / np.linalg.norm(state.r)


# ---------------------------------------------------------------------------
# equinoctial dynamics matrices and their partials
# ---------------------------------------------------------------------------
def mee_matrix_M(mee: MeeState, mu: float) -> np.ndarray:
    """6x3 matrix mapping the thrust acceleration to element rates."""
    out = np.empty((6, 3))
    _k.mee_matrix_m(mee.as_array(), mu, out)
    return out


def mee_vector_D(mee: MeeState, mu: float) -> np.ndarray:
    """Unforced drift: zeros except the true-longitude rate sqrt(mu p)(w/p)^2."""
    out = np.zeros(6)
    out[5] = _k.mee_d6(mee.as_array(), mu)
    return out


def mee_matrix_M_jacobian(mee: MeeState, mu: float) -> np.ndarray:
    """(6, 6, 3) stack of dM/dx_c for c = (p, f, g, h, k, L)."""
    out = np.empty((6, 6, 3))
    _k.mee_m_partials(mee.as_array(), mu, out)
    return out


def mee_vector_D_jacobian(mee: MeeState, mu: float) -> np.ndarray:
    """Gradient of the sixth drift component; h and k entries are exactly zero."""
    out = np.empty(6)
    _k.mee_d6_grad(mee.as_array(), mu, out)
    return out
