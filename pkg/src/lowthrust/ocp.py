"""Indirect-method engine for fuel- and time-optimal low-thrust transfers.

The spatial state is expressed in modified equinoctial elements; the
augmented state stacks [x (6), m, lambda_x (6), lambda_m] and the scalar
cost multiplier lambda_0 completes the shooting unknowns.  All solves run
internally in the scaled system (mu = 1, |r1| = 1, m0 = 1); solutions are
reported in SI units with the scaled trajectory attached.

Formulations:
    'fuel'        fixed-time rendezvous, smoothed throttle in (0, 1)
    'time-p2p'    free final time, target moves on its orbit, phase matched
    'time-orbit'  free final time, terminal true longitude relaxed
    'time-fixed'  free final time, terminal state pinned in space
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import optimize

from . import _kernels as _k
from .astro import MeeState, TWO_PI
from .errors import (DegenerateDirectionError, DegenerateStateError,
                     IntegrationFailureError, NoConvergenceError,
                     TauOutOfRangeError, ZeroMultiplierError)
from .problem import BoundaryConditions, PropulsionParams
from .selfsim import NondimParams, ScaleSet, nondimensionalize

FORMULATIONS = ("fuel", "time-p2p", "time-orbit", "time-fixed")

_BIG_RESIDUAL = 1e3


@dataclass(frozen=True)
class SmoothingParams:
    """Logarithmic smoothing strength of the fuel-optimal throttle."""

    epsilon: float = 1e-5

    def __post_init__(self):
        if not 0.0 < self.epsilon < 1.0:
            raise ValueError("epsilon must lie in (0, 1)")


@dataclass(frozen=True)
class CostateVector:
    lambda_x: np.ndarray
    lambda_m: float
    lambda_0: float

    def __post_init__(self):
        object.__setattr__(self, "lambda_x",
                           np.asarray(self.lambda_x, dtype=float).reshape(6))

    def as_array(self) -> np.ndarray:
        return np.concatenate([self.lambda_x, [self.lambda_m, self.lambda_0]])

    @classmethod
    def from_array(cls, z) -> "CostateVector":
        z = np.asarray(z, dtype=float)
        return cls(lambda_x=z[:6].copy(), lambda_m=float(z[6]), lambda_0=float(z[7]))

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.as_array()))


@dataclass(frozen=True)
class AugmentedState:
    mee: MeeState
    m: float
    costate: CostateVector

    def as_array(self) -> np.ndarray:
        return np.concatenate([self.mee.as_array(), [self.m],
                               self.costate.lambda_x, [self.costate.lambda_m]])


@dataclass(frozen=True)
class TransferProblem:
    bc: BoundaryConditions
    prop: PropulsionParams
    formulation: str = "fuel"
    n_rev: int = 0
    smoothing: SmoothingParams = field(default_factory=SmoothingParams)
    # explicit scaled-frame terminal state (p,f,g,h,k,L-unwrapped); used by
    # the 'time-fixed' formulation instead of the bc arrival pair
    target_mee: np.ndarray | None = None

    def __post_init__(self):
        if self.formulation not in FORMULATIONS:
            raise ValueError(f"unknown formulation {self.formulation!r}")
        if self.n_rev < 0:
            raise ValueError("revolution count must be non-negative")


@dataclass
class TpbvpSolution:
    """Converged extremal with its scaled trajectory and SI labels."""

    problem: TransferProblem
    formulation: str
    costate0: CostateVector
    tf: float            # s
    dv: float            # m/s
    m_f: float           # kg
    t_grid: np.ndarray   # scaled times
    trajectory: np.ndarray  # (n, 14) scaled augmented states
    residual_norm: float
    revolutions: int
    scales: ScaleSet
    nd: NondimParams
    nfev: int = 0

    @property
    def tf_nd(self) -> float:
        return self.tf / self.scales.T0

    @property
    def dv_nd(self) -> float:
        return self.dv / self.scales.V0

    @property
    def mass_fraction(self) -> float:
        return self.m_f / self.scales.m0

    def shooting_vector(self) -> np.ndarray:
        z = self.costate0.as_array()
        if self.formulation == "fuel":
            return z
        return np.concatenate([z, [self.tf_nd]])


# ---------------------------------------------------------------------------
# pointwise control laws and Hamiltonian
# ---------------------------------------------------------------------------
def fuel_control(aug: AugmentedState, prop: PropulsionParams,
                 sm: SmoothingParams = SmoothingParams()
                 ) -> tuple[np.ndarray, float]:
    """Pointwise-optimal thrust direction and smoothed throttle.

    alpha = -M^T lam_x / ||M^T lam_x||;
    u = 2 eps / (rho + 2 eps + sqrt(rho^2 + 4 eps^2)) with the switching
    function rho = 1 - v_ex ||M^T lam_x|| / (lam0 m) - lam_m / lam0.
    """
    lam0 = aug.costate.lambda_0
    if lam0 < 1e-12:
        raise ZeroMultiplierError("lambda_0 below 1e-12")
    M = np.empty((6, 3))
    _k.mee_matrix_m(aug.mee.as_array(), prop.mu, M)
    mtl = M.T @ aug.costate.lambda_x
    nm = float(np.linalg.norm(mtl))
    if nm < 1e-14:
        raise DegenerateDirectionError("||M^T lambda_x|| below 1e-14")
    alpha = -mtl / nm
    rho = 1.0 - prop.v_exhaust * nm / (lam0 * aug.m) - aug.costate.lambda_m / lam0
    u = _k.smoothed_throttle(rho, sm.epsilon)
    return alpha, float(u)


def time_control(aug: AugmentedState) -> tuple[np.ndarray, float]:
    """Time-optimal control: full throttle along -M^T lam_x.

    The direction is independent of mu (it scales M uniformly).
    """
    M = np.empty((6, 3))
    _k.mee_matrix_m(aug.mee.as_array(), 1.0, M)
    mtl = M.T @ aug.costate.lambda_x
    nm = float(np.linalg.norm(mtl))
    if nm < 1e-14:
        raise DegenerateDirectionError("||M^T lambda_x|| below 1e-14")
    return -mtl / nm, 1.0


def switching_function(aug: AugmentedState, prop: PropulsionParams) -> float:
    M = np.empty((6, 3))
    _k.mee_matrix_m(aug.mee.as_array(), prop.mu, M)
    nm = float(np.linalg.norm(M.T @ aug.costate.lambda_x))
    lam0 = aug.costate.lambda_0
    return 1.0 - prop.v_exhaust * nm / (lam0 * aug.m) - aug.costate.lambda_m / lam0


def _mode(formulation: str) -> int:
    return _k.MODE_FUEL if formulation == "fuel" else _k.MODE_TIME


def augmented_rhs(aug: AugmentedState, prop: PropulsionParams,
                  sm: SmoothingParams = SmoothingParams(),
                  formulation: str = "fuel") -> np.ndarray:
    """Time derivative of [x, m, lambda_x, lambda_m] at the optimal control."""
    out = np.empty(14)
    _k.control_and_rates(aug.as_array(), prop.mu, prop.t_max, prop.v_exhaust,
                         aug.costate.lambda_0, sm.epsilon, _mode(formulation),
                         out, np.empty(_k.WORKSPACE))
    return out


def hamiltonian(aug: AugmentedState, prop: PropulsionParams,
                sm: SmoothingParams = SmoothingParams(),
                formulation: str = "fuel") -> float:
    """Hamiltonian at the pointwise-optimal control (homogeneous in the multipliers)."""
    return float(_k.hamiltonian(aug.as_array(), prop.mu, prop.t_max,
                                prop.v_exhaust, aug.costate.lambda_0,
                                sm.epsilon, _mode(formulation),
                                np.empty(_k.WORKSPACE)))


def integrate_arc(aug0: AugmentedState, t_span: tuple[float, float],
                  prop: PropulsionParams, sm: SmoothingParams = SmoothingParams(),
                  formulation: str = "fuel", rtol: float = 1e-10,
                  atol: float = 1e-12, t_eval=None) -> tuple[np.ndarray, np.ndarray]:
    """Integrate the augmented dynamics over t_span with local error control.

    Steps are additionally refined through smoothed-throttle transitions,
    where the embedded error estimate is blind.  Returns (times, states)
    sampled at `t_eval` (default 129 uniform points).
    """
    t0, t1 = t_span
    if t_eval is None:
        t_eval = np.linspace(t0, t1, 129)
    t_eval = np.asarray(t_eval, dtype=float)
    y_eval = np.empty((t_eval.size, 14))
    st = _k.rk78_integrate(aug0.as_array(), t0, t1, prop.mu, prop.t_max,
                           prop.v_exhaust, aug0.costate.lambda_0, sm.epsilon,
                           _mode(formulation), rtol, atol, t_eval, y_eval,
                           np.empty(_k.WORKSPACE))
    if st != _k.OK:
        raise IntegrationFailureError("adaptive step-size underflow")
    return t_eval, y_eval


# ---------------------------------------------------------------------------
# scaled shooting problem
# ---------------------------------------------------------------------------
class _ScaledProblem:
    """Shooting residuals of one transfer in the mu = 1, |r1| = 1 frame."""

    def __init__(self, problem: TransferProblem, rtol: float = 1e-10,
                 atol: float = 1e-12):
        bc, prop = problem.bc, problem.prop
        bc_nd, nd, scales = nondimensionalize(bc, prop)
        self.problem = problem
        self.nd = nd
        self.scales = scales
        self.rtol = rtol
        self.atol = atol
        self.eps = problem.smoothing.epsilon
        self.formulation = problem.formulation
        self.mode = _mode(problem.formulation)
        self.beta = nd.beta
        self.vexn = prop.v_exhaust / scales.V0
        self.dtn = bc_nd.dt
        x0 = np.empty(6)
        if _k.cart_to_mee(bc_nd.r1, bc_nd.v1, 1.0, x0) != _k.OK:
            raise DegenerateStateError("departure state rejected by the element set")
        self.x0 = x0
        self.x0_r = bc_nd.r1.copy()
        self.x0_v = bc_nd.v1.copy()
        self.r2n = bc_nd.r2.copy()
        self.v2n = bc_nd.v2.copy()
        hz = bc_nd.r1[0] * bc_nd.v1[1] - bc_nd.r1[1] * bc_nd.v1[0]
        self.retro = 1 if hz < 0.0 else 0
        if problem.formulation == "time-fixed":
            if problem.target_mee is None:
                raise ValueError("time-fixed formulation needs an explicit target_mee")
            self.xt = np.asarray(problem.target_mee, dtype=float).copy()
        else:
            x2 = np.empty(6)
            if _k.cart_to_mee(self.r2n, self.v2n, 1.0, x2) != _k.OK:
                raise DegenerateStateError("arrival state rejected by the element set")
            dl = (x2[5] - x0[5]) % TWO_PI
            x2u = x2.copy()
            x2u[5] = x0[5] + dl + TWO_PI * problem.n_rev
            self.xt = x2u
        self.n_unknowns = 8 if problem.formulation == "fuel" else 9
        self._tshot = np.empty(1)
        self._yshot = np.empty((1, 14))
        self._yshot_c = np.empty((1, 14), dtype=complex)
        self._work = np.empty(_k.WORKSPACE)
        self._work_c = np.empty(_k.WORKSPACE, dtype=complex)
        self._impulse_cache = None
        self.nfev = 0  # residual evaluations, including complex-step columns

    def impulse_estimate(self) -> tuple[np.ndarray, float]:
        """Two-impulse reference: unit departure increment in the local
        radial/transverse/normal frame and the total |dv1|+|dv2| (scaled)."""
        if self._impulse_cache is None:
            dir_rtn = np.array([0.0, 1.0, 0.0])
            total = 0.1
            v1l = np.empty(3)
            v2l = np.empty(3)
            st = _k.lambert_best_branch(self.x0_r, self.r2n, self.dtn, 1.0,
                                        self.problem.n_rev, v1l, v2l,
                                        self.x0_v, self.v2n, self.retro)
            if st == _k.OK:
                dv1 = v1l - self.x0_v
                dv2 = self.v2n - v2l
                total = float(np.linalg.norm(dv1) + np.linalg.norm(dv2))
                sph = np.empty(19)
                if total > 1e-13 and _k._sph_components(
                        self.x0_r, self.x0_v, dv1, sph, 16) == _k.OK:
                    d = sph[16:19]
                    nd = np.linalg.norm(d)
                    if nd > 0.0:
                        dir_rtn = d / nd
            self._impulse_cache = (dir_rtn, max(total, 1e-8))
        return self._impulse_cache

    # -- propagation -------------------------------------------------------
    def integrate(self, z: np.ndarray, tf: float, t_eval=None):
        """Propagate the augmented state; returns (samples, status).

        Accepts real or complex multipliers; the complex path carries
        complex-step perturbations through an identical step sequence.
        """
        cplx = np.iscomplexobj(z)
        y0 = np.empty(14, dtype=complex if cplx else float)
        y0[:6] = self.x0
        y0[6] = 1.0
        y0[7:13] = z[:6]
        y0[13] = z[6]
        if t_eval is None:
            self._tshot[0] = tf
            t_eval = self._tshot
            y_eval = self._yshot_c if cplx else self._yshot
        else:
            y_eval = np.empty((len(t_eval), 14), dtype=complex if cplx else float)
        st = _k.rk78_integrate(y0, 0.0, tf, 1.0, self.beta, self.vexn,
                               z[7], self.eps, self.mode, self.rtol, self.atol,
                               t_eval, y_eval, self._work_c if cplx else self._work)
        return y_eval, st

    def target_at(self, tf: float) -> tuple[np.ndarray, int]:
        """Moving-target elements at tf with continuously unwrapped longitude."""
        rt = np.empty(3)
        vt = np.empty(3)
        st = _k.kepler_universal(self.r2n, self.v2n, tf - self.dtn, 1.0, rt, vt)
        if st != _k.OK:
            return self.xt, st
        xt = np.empty(6)
        st = _k.cart_to_mee(rt, vt, 1.0, xt)
        if st != _k.OK:
            return self.xt, st
        dl, st = _k.swept_true_longitude(self.r2n, self.v2n, tf - self.dtn, 1.0)
        if st != _k.OK:
            return self.xt, st
        xt[5] = self.xt[5] + dl
        return xt, _k.OK

    def hamiltonian_at(self, y: np.ndarray, lam0):
        work = self._work_c if np.iscomplexobj(y) else self._work
        return _k.hamiltonian(y, 1.0, self.beta, self.vexn, lam0,
                              self.eps, self.mode, work)

    # -- residuals ----------------------------------------------------------
    def residual(self, z: np.ndarray) -> np.ndarray:
        """Shooting residual; generic over real/complex-step multipliers.

        For complex z the transfer time z[8] must be real (its Jacobian
        column is assembled analytically in `jacobian`).
        """
        cplx = np.iscomplexobj(z)
        self.nfev += 1
        res = np.empty(self.n_unknowns, dtype=complex if cplx else float)
        if self.formulation == "fuel":
            tf = self.dtn
        else:
            tf = float(z[8].real)
            if not (1e-9 < tf < 200.0 * max(self.dtn, 1.0)):
                res[:] = _BIG_RESIDUAL * (1.0 + abs(tf - self.dtn))
                return res
        ys, st = self.integrate(z, tf)
        if st != _k.OK:
            res[:] = _BIG_RESIDUAL
            return res
        y = ys[-1]
        if not np.all(np.isfinite(y)) or y[6].real <= 1e-4:
            res[:] = _BIG_RESIDUAL
            return res
        if self.formulation == "fuel":
            res[:5] = y[:5] - self.xt[:5]
            res[5] = y[5] - self.xt[5]
            res[6] = y[13]
            res[7] = _cnorm(z) - 1.0
            return res
        lam0 = z[7]
        if self.formulation == "time-p2p":
            xt, st = self.target_at(tf)
            if st != _k.OK:
                res[:] = _BIG_RESIDUAL
                return res
            res[:5] = y[:5] - xt[:5]
            res[5] = y[5] - xt[5]
            res[6] = y[13]
            res[7] = self.hamiltonian_at(y, lam0) - y[12] * _l_rate(y)
        elif self.formulation == "time-orbit":
            res[:5] = y[:5] - self.xt[:5]
            res[5] = y[12]
            res[6] = y[13]
            res[7] = self.hamiltonian_at(y, lam0) - y[12] * _l_rate(y)
        else:  # time-fixed
            res[:5] = y[:5] - self.xt[:5]
            res[5] = y[5] - self.xt[5]
            res[6] = y[13]
            res[7] = self.hamiltonian_at(y, lam0)
        res[8] = _cnorm(z[:8]) - 1.0
        return res

    def residual_from_terminal(self, z: np.ndarray, y: np.ndarray,
                               tf: float) -> np.ndarray:
        """Assemble the residual from a terminal state already integrated."""
        res = np.empty(self.n_unknowns)
        if self.formulation == "fuel":
            res[:5] = y[:5] - self.xt[:5]
            res[5] = y[5] - self.xt[5]
            res[6] = y[13]
            res[7] = float(np.linalg.norm(z)) - 1.0
            return res
        lam0 = z[7]
        if self.formulation == "time-p2p":
            xt, st = self.target_at(tf)
            res[:5] = y[:5] - xt[:5]
            res[5] = y[5] - xt[5]
            res[6] = y[13]
            res[7] = self.hamiltonian_at(y, lam0) - y[12] * _l_rate(y)
        elif self.formulation == "time-orbit":
            res[:5] = y[:5] - self.xt[:5]
            res[5] = y[12]
            res[6] = y[13]
            res[7] = self.hamiltonian_at(y, lam0) - y[12] * _l_rate(y)
        else:
            res[:5] = y[:5] - self.xt[:5]
            res[5] = y[5] - self.xt[5]
            res[6] = y[13]
            res[7] = self.hamiltonian_at(y, lam0)
        res[8] = float(np.linalg.norm(z[:8])) - 1.0
        return res

    def jacobian(self, z: np.ndarray, step: float = 1e-30) -> np.ndarray:
        """Exact shooting Jacobian: complex step over the multipliers plus an
        analytic final-time column for the free-time formulations."""
        n = self.n_unknowns
        J = np.empty((n, n))
        zc = z.astype(complex)
        for j in range(8):
            zc[j] += 1j * step
            J[:, j] = self.residual(zc).imag / step
            zc[j] = z[j]
        if n == 9:
            J[:, 8] = self._tf_column(z)
        return J

    def _tf_column(self, z: np.ndarray) -> np.ndarray:
        """d(residual)/d(tf): terminal rates of the chaser minus the target's."""
        tf = float(z[8])
        ys, st = self.integrate(z, tf)
        if st != _k.OK:
            return np.zeros(9)
        y = ys[-1].copy()
        dydt = np.empty(14)
        _k.control_and_rates(y, 1.0, self.beta, self.vexn, z[7], self.eps,
                             self.mode, dydt, self._work)
        col = np.zeros(9)
        if self.formulation == "time-p2p":
            xt, st = self.target_at(tf)
            col[:5] = dydt[:5]
            col[5] = dydt[5] - _k.mee_d6(xt, 1.0)  # target recedes at its own rate
        elif self.formulation == "time-orbit":
            col[:5] = dydt[:5]
            col[5] = dydt[12]
        else:  # time-fixed
            col[:6] = dydt[:6]
        col[6] = dydt[13]
        if self.formulation == "time-fixed":
            col[7] = 0.0  # H is conserved along the arc
        else:
            # d/dtf of lamL(tf) * sqrt(p)/r^2 along the trajectory
            g6 = np.empty(6)
            _k.mee_d6_grad(y[:6], 1.0, g6)
            col[7] = -(dydt[12] * _l_rate(y) + y[12] * float(g6 @ dydt[:6]))
        return col


def _cnorm(v: np.ndarray):
    """Analytic continuation of the Euclidean norm (complex-step safe)."""
    return np.sqrt(np.sum(v * v))


def _l_rate(y: np.ndarray):
    """Unforced true-longitude rate sqrt(mu p)/r^2 at the chaser's final state."""
    p = y[0]
    w = 1.0 + y[1] * np.cos(y[5]) + y[2] * np.sin(y[5])
    r = p / w
    return np.sqrt(p) / (r * r)


# ---------------------------------------------------------------------------
# nonlinear solve
# ---------------------------------------------------------------------------
def _cold_guess(rng: np.random.Generator, sp: "_ScaledProblem",
                tf_scale: float, primer: bool) -> np.ndarray:
    """Cold-start multipliers for the shooting solve.

    With `primer` the costate is seeded so the initial thrust direction
    matches the two-impulse departure increment (lam_x = -M (M^T M)^-1 d)
    and its magnitude puts the smoothed throttle near the level a
    two-impulse transfer of the same cost would need.  Otherwise a random
    direction is used, still scaled to the responsive throttle regime.
    """
    n = sp.n_unknowns
    z = np.empty(n)
    M = np.empty((6, 3))
    _k.mee_matrix_m(sp.x0, 1.0, M)
    if primer:
        dir_rtn, dv_total = sp.impulse_estimate()
        d = -M @ np.linalg.solve(M.T @ M + 1e-12 * np.eye(3), dir_rtn)
        nm = float(np.linalg.norm(M.T @ d))
        if sp.mode == _k.MODE_FUEL:
            u_need = min(0.9, max(1e-4, dv_total / (sp.beta * sp.dtn)))
            rho_t = sp.eps * (1.0 / u_need - 1.0 / (1.0 - u_need))
            # jitter the switching level, not the magnitude: rho is what the
            # throttle responds to
            scale = max(0.05, 1.0 - rho_t * rng.uniform(0.5, 2.0)) / sp.vexn
        else:
            scale = rng.uniform(0.9, 1.1) / sp.vexn
        d *= scale / nm
    else:
        d = rng.normal(0.0, 1.0, 6)
        nm = np.linalg.norm(M.T @ d) * sp.vexn
        if nm > 0.0:
            d /= nm
        d *= rng.uniform(0.3, 1.5)
    z[:6] = d
    # lam_m shifts the switching function directly; keep it well below the
    # throttle's working point for primer starts
    z[6] = 0.0 if primer else abs(rng.normal(0.0, 0.02))
    z[7] = 1.0
    z[:8] /= np.linalg.norm(z[:8])
    if n == 9:
        z[8] = tf_scale * rng.uniform(0.5, 1.5) if not primer else tf_scale
    return z


def _coerce_guess(problem: TransferProblem, guess, sp: _ScaledProblem) -> np.ndarray:
    if isinstance(guess, CostateVector):
        z = guess.as_array()
    elif isinstance(guess, tuple):
        cv, tf = guess
        z = np.concatenate([cv.as_array() if isinstance(cv, CostateVector)
                            else np.asarray(cv, dtype=float), [tf / sp.scales.T0]])
    else:
        z = np.asarray(guess, dtype=float).copy()
    if z.size != sp.n_unknowns:
        if z.size == 8 and sp.n_unknowns == 9:
            z = np.concatenate([z, [sp.dtn]])
        else:
            raise ValueError(f"guess has size {z.size}, expected {sp.n_unknowns}")
    return z


def _newton_warm(sp: _ScaledProblem, z0: np.ndarray, tol: float,
                 max_iter: int = 10, return_jac: bool = False):
    """Damped Newton with the exact Jacobian, tuned for warm starts.

    Terminates as soon as the residual norm is inside `tol` instead of
    polishing to the step-size floor; returns None when a step cannot be
    accepted (caller falls back to the trust-region solver).  With
    `return_jac` the last factored Jacobian is returned for chord reuse.
    """
    from scipy.linalg import lu_factor

    z = z0.copy()
    F = sp.residual(z)
    fn = float(np.linalg.norm(F))
    if not np.isfinite(fn):
        return (None, None) if return_jac else None
    lu = None
    for _ in range(max_iter):
        if fn < tol:
            break
        J = sp.jacobian(z)
        try:
            lu = lu_factor(J)
            step = _lu_solve_neg(lu, F)
        except Exception:
            step, *_ = np.linalg.lstsq(J, -F, rcond=None)
        lam = 1.0
        accepted = False
        while lam >= 1.0 / 64.0:
            F2 = sp.residual(z + lam * step)
            f2 = float(np.linalg.norm(F2))
            if np.isfinite(f2) and (f2 < (1.0 - 0.2 * lam) * fn or f2 < tol):
                z = z + lam * step
                F, fn = F2, f2
                accepted = True
                break
            lam *= 0.5
        if not accepted:
            return (None, None) if return_jac else None
    if fn < tol:
        return (z, lu) if return_jac else z
    return (None, None) if return_jac else None


def _lu_solve_neg(lu, F):
    from scipy.linalg import lu_solve
    return lu_solve(lu, -F)


def _chord_step(sp: _ScaledProblem, z0: np.ndarray, lu, tol: float,
                max_iter: int = 12):
    """Chord (frozen-Jacobian) iteration for tightly warm-started steps.

    A stale factored Jacobian from a neighboring continuation point keeps
    per-step cost at a handful of residual evaluations; returns None as
    soon as contraction is lost so the caller can refresh the Jacobian.
    """
    z = z0.copy()
    F = sp.residual(z)
    fn = float(np.linalg.norm(F))
    if not np.isfinite(fn):
        return None
    for _ in range(max_iter):
        if fn < tol:
            return z
        z2 = z + _lu_solve_neg(lu, F)
        F2 = sp.residual(z2)
        f2 = float(np.linalg.norm(F2))
        if not np.isfinite(f2) or f2 > 0.7 * fn:
            return None
        z, F, fn = z2, F2, f2
    return z if fn < tol else None


def _hybr_polish(sp: _ScaledProblem, z0: np.ndarray, tol: float,
                 lm_fallback: bool = False, maxfev: int = 2000,
                 restarts: int = 4):
    """Hybrid-Powell solve with restarts; optional Levenberg-Marquardt rescue.

    The trust-region restart helps when MINPACK declares lack of progress
    inside a curved valley; LM follows such valleys more patiently.
    """
    z = z0
    best = None
    best_norm = np.inf
    for _ in range(restarts):
        sol = optimize.root(sp.residual, z, jac=sp.jacobian, method="hybr",
                            options={"xtol": 1e-13, "maxfev": maxfev})
        rnorm = float(np.linalg.norm(sol.fun))
        if not np.isfinite(rnorm):
            break
        if rnorm < best_norm:
            best, best_norm = sol.x, rnorm
        if rnorm < tol:
            return sol.x
        if rnorm > 0.5 or np.allclose(sol.x, z, rtol=0.0, atol=1e-15):
            break
        z = sol.x
    if lm_fallback and best is not None and best_norm < 0.5:
        res = optimize.least_squares(sp.residual, best, jac=sp.jacobian,
                                     method="lm", xtol=1e-15, ftol=1e-15,
                                     gtol=1e-15, max_nfev=max(maxfev // 4, 100))
        rnorm = float(np.linalg.norm(res.fun))
        if np.isfinite(rnorm) and rnorm < tol:
            return res.x
        if rnorm < best_norm:
            # one more trust-region pass from the LM point
            sol = optimize.root(sp.residual, res.x, jac=sp.jacobian,
                                method="hybr",
                                options={"xtol": 1e-13, "maxfev": maxfev})
            if float(np.linalg.norm(sol.fun)) < tol:
                return sol.x
    return None


def _smoothing_cascade(sp: _ScaledProblem, z0: np.ndarray, tol: float,
                       eps_first: float):
    """Cold-start a fuel solve at a large throttle smoothing and walk the
    smoothing down adaptively; each stage warm-starts the next.

    All emitted solutions are converged at the target epsilon; the ladder
    only steers cold starts past the stiff near-bang regime.  The first
    rung doubles as a cheap go/no-go triage for the attempt.
    """
    eps_target = sp.eps
    try:
        sp.eps = max(eps_first, eps_target)
        z = _hybr_polish(sp, z0, max(tol, 1e-7), maxfev=400, restarts=2)
        if z is None:
            return None
        e = sp.eps
        ratio = 0.3
        while e > eps_target:
            e_next = max(e * ratio, eps_target)
            sp.eps = e_next
            zn = _newton_warm(sp, z, max(tol, 1e-7))
            if zn is None:
                zn = _hybr_polish(sp, z, max(tol, 1e-7), maxfev=400, restarts=2)
            if zn is not None:
                z = zn
                e = e_next
                ratio = max(ratio * 0.7, 0.25)
            else:
                ratio = math.sqrt(ratio)
                if ratio > 0.93:
                    return None
        sp.eps = eps_target
        zn = _newton_warm(sp, z, tol)
        if zn is not None:
            return zn
        return _hybr_polish(sp, z, tol, lm_fallback=True, maxfev=800)
    finally:
        sp.eps = eps_target


# first-rung smoothing schedule for successive cold attempts: deep starts
# give the shortest ladders; smoother starts rescue harder geometries
_EPS_FIRST = (3e-3, 3e-2, 3e-1, 1e-3, 1e-2, 1e-1, 3e-3, 3e-2, 3e-1, 1e-3,
              1e-2, 1e-1)


def solve_tpbvp(problem: TransferProblem, guess=None, rng=None,
                tol: float = 1e-8, max_attempts: int = 20,
                rtol: float = 1e-10, atol: float = 1e-12,
                n_samples: int = 129, tf_scale=None) -> TpbvpSolution:
    """Solve the two-point boundary value problem of one transfer.

    A caller-provided guess (typically the homotopy predecessor) is tried
    first; cold attempts seed the multipliers from the two-impulse
    reference or from random responsive-throttle directions, and fuel
    problems additionally pass through a throttle-smoothing ladder.
    """
    sp = _ScaledProblem(problem, rtol=rtol, atol=atol)
    rng = np.random.default_rng(rng) if not isinstance(rng, np.random.Generator) else rng
    if tf_scale is None:
        if problem.formulation == "fuel":
            tf_scale = sp.dtn
        else:
            # crude reachability time: two-impulse cost at full throttle
            _, dv_total = sp.impulse_estimate()
            tf_scale = min(max(1.3 * dv_total / sp.beta, 1e-3), 3.0 * sp.dtn)
    attempts = []
    if guess is not None:
        attempts.append((_coerce_guess(problem, guess, sp), -1))
    attempts += [(_cold_guess(rng, sp, tf_scale, primer=i % 3 == 0), i)
                 for i in range(max_attempts)]
    best = None
    for z0, i in attempts:
        if i >= 0 and sp.mode == _k.MODE_FUEL:
            z = _smoothing_cascade(sp, z0, tol,
                                   eps_first=_EPS_FIRST[i % len(_EPS_FIRST)])
        else:
            z = _newton_warm(sp, z0, tol) if i < 0 else None
            if z is None:
                z = _hybr_polish(sp, z0, tol, lm_fallback=True)
        if z is not None and z[7] > 1e-12:
            best = z
            break
    if best is None:
        raise NoConvergenceError(
            f"no converged solution after {len(attempts)} attempts")
    return _package_solution(problem, sp, best, n_samples)


def _package_solution(problem: TransferProblem, sp: _ScaledProblem,
                      z: np.ndarray, n_samples: int) -> TpbvpSolution:
    tf_nd = sp.dtn if problem.formulation == "fuel" else float(z[8])
    t_grid = np.linspace(0.0, tf_nd, n_samples)
    ys, st = sp.integrate(z, tf_nd, t_eval=t_grid)
    if st != _k.OK:
        raise IntegrationFailureError("trajectory recording pass failed")
    res = sp.residual_from_terminal(z, ys[-1], tf_nd)
    mf_frac = float(ys[-1, 6])
    dv = sp.scales.V0 * sp.vexn * math.log(1.0 / mf_frac)
    revs = int(math.floor((ys[-1, 5] - ys[0, 5]) / TWO_PI))
    return TpbvpSolution(
        problem=problem,
        formulation=problem.formulation,
        costate0=CostateVector.from_array(z[:8]),
        tf=tf_nd * sp.scales.T0,
        dv=dv,
        m_f=mf_frac * sp.scales.m0,
        t_grid=t_grid,
        trajectory=ys,
        residual_norm=float(np.linalg.norm(res)),
        revolutions=revs,
        scales=sp.scales,
        nd=sp.nd,
        nfev=sp.nfev,
    )


# ---------------------------------------------------------------------------
# public shooting functions
# ---------------------------------------------------------------------------
def shoot_fuel(costate0, bc: BoundaryConditions, prop: PropulsionParams,
               sm: SmoothingParams = SmoothingParams(), n_rev: int = 0,
               rtol: float = 1e-10, atol: float = 1e-12) -> np.ndarray:
    """Fuel-optimal shooting residual (8,) at the given initial multipliers."""
    problem = TransferProblem(bc=bc, prop=prop, formulation="fuel",
                              n_rev=n_rev, smoothing=sm)
    sp = _ScaledProblem(problem, rtol=rtol, atol=atol)
    z = costate0.as_array() if isinstance(costate0, CostateVector) \
        else np.asarray(costate0, dtype=float)
    return sp.residual(z)


def shoot_time(costate0, tf: float, bc: BoundaryConditions,
               prop: PropulsionParams, terminal: str = "point-to-point",
               rtol: float = 1e-10, atol: float = 1e-12) -> np.ndarray:
    """Time-optimal shooting residual (9,); `tf` in seconds.

    terminal 'point-to-point' matches the moving target's phase and closes
    with the free-time condition H = lambda_L * sqrt(mu p)/r^2;
    'orbit-to-orbit' replaces the longitude row with lambda_L(tf) = 0.
    """
    formulation = {"point-to-point": "time-p2p", "orbit-to-orbit": "time-orbit",
                   "fixed": "time-fixed"}[terminal]
    problem = TransferProblem(bc=bc, prop=prop, formulation=formulation)
    sp = _ScaledProblem(problem, rtol=rtol, atol=atol)
    cv = costate0.as_array() if isinstance(costate0, CostateVector) \
        else np.asarray(costate0, dtype=float)
    z = np.concatenate([cv, [tf / sp.scales.T0]])
    return sp.residual(z)


def shooting_jacobian(sp_or_problem, z: np.ndarray, method: str = "exact",
                      step: float = 1e-7) -> np.ndarray:
    """Jacobian of the shooting residual at z.

    method 'exact' uses the complex-step/analytic assembly the solver runs
    on; 'fd' is an independent forward-difference route kept for
    cross-checking.
    """
    sp = sp_or_problem if isinstance(sp_or_problem, _ScaledProblem) \
        else _ScaledProblem(sp_or_problem)
    z = np.asarray(z, dtype=float)
    if method == "exact":
        return sp.jacobian(z)
    f0 = sp.residual(z)
    n = z.size
    J = np.empty((n, n))
    for j in range(n):
        zp = z.copy()
        h = step * max(1.0, abs(z[j]))
        zp[j] += h
        J[:, j] = (sp.residual(zp) - f0) / h
    return J


# ---------------------------------------------------------------------------
# prefix truncation of time-optimal extremals
# ---------------------------------------------------------------------------
def prefix_extremal_shift(sol: TpbvpSolution, tau: float) -> TpbvpSolution:
    """Truncate a time-optimal extremal at tau and restore the endpoint conditions.

    The mass costate is shifted by a constant, lambda_m_hat(t) =
    lambda_m(t) - lambda_m(tau), which leaves the state/costate pair and
    the control unchanged; the scalar multiplier absorbs the Hamiltonian
    offset via lambda_0_hat = lambda_0 + (T_max/v_ex) * delta.  The result
    satisfies lambda_m_hat(tau) = 0 exactly and keeps the Hamiltonian
    constant, so the truncated arc is itself an extremal of the induced
    free-time problem with terminal state x(tau).
    """
    if sol.formulation == "fuel":
        raise ValueError("prefix truncation applies to time-optimal solutions")
    T0 = sol.scales.T0
    tau_nd = tau / T0
    if not (0.0 < tau_nd <= sol.tf_nd * (1.0 + 1e-12)):
        raise TauOutOfRangeError(f"tau = {tau} outside (0, tf]")
    tau_nd = min(tau_nd, sol.tf_nd)
    problem = sol.problem
    sp = _ScaledProblem(problem)
    z = sol.shooting_vector()
    t_grid = np.linspace(0.0, tau_nd, len(sol.t_grid))
    ys, st = sp.integrate(z, tau_nd, t_eval=t_grid)
    if st != _k.OK:
        raise IntegrationFailureError("prefix recording pass failed")
    gamma = sp.beta / sp.vexn  # scaled mass-flow rate at full throttle
    delta = -float(ys[-1, 13])
    lam0_hat = float(z[7]) + gamma * delta
    ys_shift = ys.copy()
    ys_shift[:, 13] += delta
    ys_shift[-1, 13] = 0.0  # exact by construction
    # renormalize the multiplier vector at t0 (scale invariance of the PMP)
    z_hat = np.empty(8)
    z_hat[:6] = ys_shift[0, 7:13]
    z_hat[6] = ys_shift[0, 13]
    z_hat[7] = lam0_hat
    scale = np.linalg.norm(z_hat)
    z_hat /= scale
    ys_shift[:, 7:14] /= scale
    lam0_hat /= scale
    target = ys[-1, :6].copy()
    new_problem = replace(problem, formulation="time-fixed", target_mee=target)
    sp_new = _ScaledProblem(new_problem)
    res = sp_new.residual(np.concatenate([z_hat, [tau_nd]]))
    mf_frac = float(ys[-1, 6])
    return TpbvpSolution(
        problem=new_problem,
        formulation="time-fixed",
        costate0=CostateVector.from_array(z_hat),
        tf=tau_nd * T0,
        dv=sol.scales.V0 * sp.vexn * math.log(1.0 / mf_frac),
        m_f=mf_frac * sol.scales.m0,
        t_grid=t_grid,
        trajectory=ys_shift,
        residual_norm=float(np.linalg.norm(res)),
        revolutions=int(math.floor((ys[-1, 5] - ys[0, 5]) / TWO_PI)),
        scales=sol.scales,
        nd=sol.nd,
    )
