"""Compiled numerical kernels.

Everything in this module is numba-compiled and operates on plain float64
arrays in whatever unit system the caller provides (the indirect solver
always passes the scaled system with mu = 1).  Python-level wrappers with
validation and typed errors live in the public modules.

Status code convention for kernels that can fail:
    0  ok
    1  no solution (e.g. transfer time below the multi-rev minimum)
    2  degenerate geometry (collinear boundary, rectilinear state)
    3  iteration did not converge
    4  step-size underflow during integration
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

# ---------------------------------------------------------------------------
# status codes
# ---------------------------------------------------------------------------
OK = 0
NO_SOLUTION = 1
DEGENERATE = 2
NO_CONVERGENCE = 3
STEP_UNDERFLOW = 4

TWO_PI = 2.0 * math.pi

# formulation codes for the augmented dynamics
MODE_FUEL = 0
MODE_TIME = 1


# ---------------------------------------------------------------------------
# modified equinoctial element helpers
# ---------------------------------------------------------------------------
WORKSPACE = 512  # scratch floats (or complexes) used by the dynamics kernels

# workspace layout offsets
_W_M = 0          # 6x3 control-influence matrix
_W_DM = 18        # 6x6x3 stack of dM/dx
_W_DG = 126       # 6-vector dD6/dx
_W_K = 132        # 13 x 14 Runge-Kutta stages
_W_YT = 314       # 14 stage state
_W_YN = 328       # 14 candidate state
_W_Y = 342        # 14 running state


@njit(cache=True)
def mee_locals(x):
    """Return (w, s2, A, B, C, sinL, cosL) for an MEE state."""
    f, g, h, k, L = x[1], x[2], x[3], x[4], x[5]
    sl = np.sin(L)
    cl = np.cos(L)
    w = 1.0 + f * cl + g * sl
    s2 = 1.0 + h * h + k * k
    av = -f * sl + g * cl
    bv = h * sl - k * cl
    cv = h * cl + k * sl
    return w, s2, av, bv, cv, sl, cl


@njit(cache=True)
def mee_matrix_m(x, mu, out):
    """Fill `out` (6x3) with the MEE control influence matrix."""
    p, f, g = x[0], x[1], x[2]
    w, s2, _, bv, _, sl, cl = mee_locals(x)
    sq = np.sqrt(p / mu)
    for i in range(6):
        for j in range(3):
            out[i, j] = 0.0
    out[0, 1] = sq * 2.0 * p / w
    out[1, 0] = sq * sl
    out[1, 1] = sq * ((w + 1.0) * cl + f) / w
    out[1, 2] = -sq * g * bv / w
    out[2, 0] = -sq * cl
    out[2, 1] = sq * ((w + 1.0) * sl + g) / w
    out[2, 2] = sq * f * bv / w
    out[3, 2] = sq * s2 * cl / (2.0 * w)
    out[4, 2] = sq * s2 * sl / (2.0 * w)
    out[5, 2] = sq * bv / w


@njit(cache=True)
def mee_d6(x, mu):
    """Unforced true-longitude rate sqrt(mu p) (w/p)^2; rows 1-5 of the drift are zero."""
    p = x[0]
    w, _, _, _, _, _, _ = mee_locals(x)
    return np.sqrt(mu * p) * (w / p) ** 2


@njit(cache=True)
def mee_m_partials(x, mu, out):
    """Fill `out` (6,6,3) with dM/dx_c for c = p, f, g, h, k, L."""
    p, f, g, h, k = x[0], x[1], x[2], x[3], x[4]
    w, s2, av, bv, cv, sl, cl = mee_locals(x)
    sq = np.sqrt(p / mu)
    w2 = w * w
    for c in range(6):
        for i in range(6):
            for j in range(3):
                out[c, i, j] = 0.0
    # d/dp: rows 2..6 are M-entries scaled by 1/(2p); row 1 col 2 is 3/w
    i2p = 1.0 / (2.0 * p)
    out[0, 0, 1] = sq * 3.0 / w
    out[0, 1, 0] = sq * sl * i2p
    out[0, 1, 1] = sq * ((w + 1.0) * cl + f) / w * i2p
    out[0, 1, 2] = -sq * g * bv / w * i2p
    out[0, 2, 0] = -sq * cl * i2p
    out[0, 2, 1] = sq * ((w + 1.0) * sl + g) / w * i2p
    out[0, 2, 2] = sq * f * bv / w * i2p
    out[0, 3, 2] = sq * s2 * cl / (2.0 * w) * i2p
    out[0, 4, 2] = sq * s2 * sl / (2.0 * w) * i2p
    out[0, 5, 2] = sq * bv / w * i2p
    # d/df  (dw/df = cosL)
    out[1, 0, 1] = -sq * 2.0 * p * cl / w2
    out[1, 1, 1] = sq * ((cl * cl + 1.0) / w - cl * ((w + 1.0) * cl + f) / w2)
    out[1, 1, 2] = sq * g * cl * bv / w2
    out[1, 2, 1] = sq * (cl * sl / w - cl * ((w + 1.0) * sl + g) / w2)
    out[1, 2, 2] = sq * bv * (1.0 / w - f * cl / w2)
    out[1, 3, 2] = -sq * s2 * cl * cl / (2.0 * w2)
    out[1, 4, 2] = -sq * s2 * cl * sl / (2.0 * w2)
    out[1, 5, 2] = -sq * cl * bv / w2
    # d/dg  (dw/dg = sinL)
    out[2, 0, 1] = -sq * 2.0 * p * sl / w2
    out[2, 1, 1] = sq * (sl * cl / w - sl * ((w + 1.0) * cl + f) / w2)
    out[2, 1, 2] = sq * bv * (g * sl / w2 - 1.0 / w)
    out[2, 2, 1] = sq * ((sl * sl + 1.0) / w - sl * ((w + 1.0) * sl + g) / w2)
    out[2, 2, 2] = -sq * f * sl * bv / w2
    out[2, 3, 2] = -sq * s2 * sl * cl / (2.0 * w2)
    out[2, 4, 2] = -sq * s2 * sl * sl / (2.0 * w2)
    out[2, 5, 2] = -sq * sl * bv / w2
    # d/dh  (dB/dh = sinL, ds2/dh = 2h)
    out[3, 1, 2] = -sq * g * sl / w
    out[3, 2, 2] = sq * f * sl / w
    out[3, 3, 2] = sq * h * cl / w
    out[3, 4, 2] = sq * h * sl / w
    out[3, 5, 2] = sq * sl / w
    # d/dk  (dB/dk = -cosL, ds2/dk = 2k)
    out[4, 1, 2] = sq * g * cl / w
    out[4, 2, 2] = -sq * f * cl / w
    out[4, 3, 2] = sq * k * cl / w
    out[4, 4, 2] = sq * k * sl / w
    out[4, 5, 2] = -sq * cl / w
    # d/dL  (dw/dL = A, dB/dL = C)
    out[5, 0, 1] = -sq * 2.0 * p * av / w2
    out[5, 1, 0] = sq * cl
    out[5, 1, 1] = sq * ((cl * av - (w + 1.0) * sl) / w - av * ((w + 1.0) * cl + f) / w2)
    out[5, 1, 2] = sq * (-g * cv / w + g * av * bv / w2)
    out[5, 2, 0] = sq * sl
    out[5, 2, 1] = sq * ((sl * av + (w + 1.0) * cl) / w - av * ((w + 1.0) * sl + g) / w2)
    out[5, 2, 2] = sq * (f * cv / w - f * av * bv / w2)
    out[5, 3, 2] = sq * (-s2 * sl / (2.0 * w) - s2 * cl * av / (2.0 * w2))
    out[5, 4, 2] = sq * (s2 * cl / (2.0 * w) - s2 * sl * av / (2.0 * w2))
    out[5, 5, 2] = sq * (-av * bv / w2 + cv / w)


@njit(cache=True)
def mee_d6_grad(x, mu, out):
    """Fill `out` (6,) with dD6/dx; components along h and k vanish identically."""
    p = x[0]
    w, _, av, _, _, sl, cl = mee_locals(x)
    sqmu = np.sqrt(mu)
    pm32 = p ** -1.5
    out[0] = -1.5 * sqmu * w * w * p ** -2.5
    out[1] = 2.0 * w * sqmu * pm32 * cl
    out[2] = 2.0 * w * sqmu * pm32 * sl
    out[3] = 0.0
    out[4] = 0.0
    out[5] = 2.0 * w * sqmu * pm32 * av


# ---------------------------------------------------------------------------
# state conversions
# ---------------------------------------------------------------------------
@njit(cache=True)
def cart_to_mee(r, v, mu, out):
    """Cartesian state to MEE with L wrapped to [0, 2pi). Returns a status code."""
    rn = math.sqrt(r[0] ** 2 + r[1] ** 2 + r[2] ** 2)
    hx = r[1] * v[2] - r[2] * v[1]
    hy = r[2] * v[0] - r[0] * v[2]
    hz = r[0] * v[1] - r[1] * v[0]
    hn = math.sqrt(hx * hx + hy * hy + hz * hz)
    if hn <= 1e-14 * rn * math.sqrt(v[0] ** 2 + v[1] ** 2 + v[2] ** 2) or rn == 0.0:
        return DEGENERATE
    p = hn * hn / mu
    hxu, hyu, hzu = hx / hn, hy / hn, hz / hn
    denom = 1.0 + hzu
    if denom < 1e-12:  # retrograde-equatorial singularity of the element set
        return DEGENERATE
    kk = hxu / denom
    hh = -hyu / denom
    # eccentricity vector
    rdv = r[0] * v[0] + r[1] * v[1] + r[2] * v[2]
    ex = (v[1] * hz - v[2] * hy) / mu - r[0] / rn
    ey = (v[2] * hx - v[0] * hz) / mu - r[1] / rn
    ez = (v[0] * hy - v[1] * hx) / mu - r[2] / rn
    s2 = 1.0 + hh * hh + kk * kk
    fhx = (1.0 - kk * kk + hh * hh) / s2
    fhy = 2.0 * kk * hh / s2
    fhz = -2.0 * kk / s2
    ghx = fhy
    ghy = (1.0 + kk * kk - hh * hh) / s2
    ghz = 2.0 * hh / s2
    ff = ex * fhx + ey * fhy + ez * fhz
    gg = ex * ghx + ey * ghy + ez * ghz
    # true longitude from radial / transverse unit vectors
    ux, uy = r[0] / rn, r[1] / rn
    tx = (rn * v[0] - rdv * r[0] / rn) / hn
    ty = (rn * v[1] - rdv * r[1] / rn) / hn
    cl = ux + ty
    sl = uy - tx
    L = math.atan2(sl, cl)
    if L < 0.0:
        L += TWO_PI
    out[0] = p
    out[1] = ff
    out[2] = gg
    out[3] = hh
    out[4] = kk
    out[5] = L
    return OK


@njit(cache=True)
def mee_to_cart(x, mu, r, v):
    """MEE state to Cartesian position/velocity."""
    p, f, g, h, k, L = x[0], x[1], x[2], x[3], x[4], x[5]
    sl = math.sin(L)
    cl = math.cos(L)
    w = 1.0 + f * cl + g * sl
    s2 = 1.0 + h * h + k * k
    a2 = h * h - k * k
    rn = p / w
    sqmup = math.sqrt(mu / p)
    r[0] = rn / s2 * (cl + a2 * cl + 2.0 * h * k * sl)
    r[1] = rn / s2 * (sl - a2 * sl + 2.0 * h * k * cl)
    r[2] = 2.0 * rn / s2 * (h * sl - k * cl)
    v[0] = -sqmup / s2 * (sl + a2 * sl - 2.0 * h * k * cl + g - 2.0 * f * h * k + a2 * g)
    v[1] = -sqmup / s2 * (-cl + a2 * cl + 2.0 * h * k * sl - f + 2.0 * g * h * k + a2 * f)
    v[2] = 2.0 * sqmup / s2 * (h * cl + k * sl + f * h + g * k)


# ---------------------------------------------------------------------------
# universal-variable Kepler propagation
# ---------------------------------------------------------------------------
@njit(cache=True)
def stumpff(z):
    """Stumpff functions (C, S) with series evaluation near z = 0."""
    if z > 1e-6:
        sz = math.sqrt(z)
        c = (1.0 - math.cos(sz)) / z
        s = (sz - math.sin(sz)) / (z * sz)
    elif z < -1e-6:
        sz = math.sqrt(-z)
        c = (math.cosh(sz) - 1.0) / (-z)
        s = (math.sinh(sz) - sz) / (-z * sz)
    else:
        c = 0.5 - z / 24.0 + z * z / 720.0
        s = 1.0 / 6.0 - z / 120.0 + z * z / 5040.0
    return c, s


@njit(cache=True)
def kepler_universal(r0, v0, dt, mu, rout, vout, tol=1e-12, maxiter=50):
    """Propagate a two-body state by `dt`. Returns a status code."""
    if dt == 0.0:
        for i in range(3):
            rout[i] = r0[i]
            vout[i] = v0[i]
        return OK
    rn = math.sqrt(r0[0] ** 2 + r0[1] ** 2 + r0[2] ** 2)
    vn2 = v0[0] ** 2 + v0[1] ** 2 + v0[2] ** 2
    rdv = r0[0] * v0[0] + r0[1] * v0[1] + r0[2] * v0[2]
    sqmu = math.sqrt(mu)
    alpha = 2.0 / rn - vn2 / mu  # 1/a
    # initial guess for the universal anomaly
    if alpha > 1e-12 / rn:
        chi = sqmu * dt * alpha
    elif alpha < -1e-12 / rn:
        am = -1.0 / alpha
        sdt = 1.0 if dt > 0.0 else -1.0
        num = -2.0 * mu * alpha * dt
        den = rdv + sdt * math.sqrt(-mu * am) * (1.0 - rn * alpha)
        arg = num / den
        if arg > 1.0:
            chi = sdt * math.sqrt(am) * math.log(arg)
        else:
            chi = sqmu * dt / rn
    else:
        chi = sqmu * dt / rn
    chi_scale = abs(sqmu * dt * max(alpha, 1.0 / rn)) + math.sqrt(rn)
    ok = False
    rat = rn
    for _ in range(maxiter):
        z = alpha * chi * chi
        c, s = stumpff(z)
        chi2 = chi * chi
        rat = chi2 * c + rdv / sqmu * chi * (1.0 - z * s) + rn * (1.0 - z * c)
        fval = rdv / sqmu * chi2 * c + (1.0 - rn * alpha) * chi2 * chi * s + rn * chi - sqmu * dt
        if rat == 0.0:
            return NO_CONVERGENCE
        dchi = fval / rat
        # clamp wild steps; F is monotone in chi so this stays convergent
        lim = 0.5 * abs(chi) + 0.1 * chi_scale
        if dchi > lim:
            dchi = lim
        elif dchi < -lim:
            dchi = -lim
        chi -= dchi
        if abs(dchi) < tol * max(1.0, abs(chi)):
            ok = True
            break
    if not ok:
        return NO_CONVERGENCE
    z = alpha * chi * chi
    c, s = stumpff(z)
    chi2 = chi * chi
    rat = chi2 * c + rdv / sqmu * chi * (1.0 - z * s) + rn * (1.0 - z * c)
    fl = 1.0 - chi2 * c / rn
    gl = dt - chi2 * chi * s / sqmu
    fdot = sqmu / (rat * rn) * chi * (z * s - 1.0)
    gdot = 1.0 - chi2 * c / rat
    for i in range(3):
        rout[i] = fl * r0[i] + gl * v0[i]
        vout[i] = fdot * r0[i] + gdot * v0[i]
    return OK


@njit(cache=True)
def swept_true_longitude(r, v, dt, mu):
    """Unwrapped true-longitude sweep of an elliptic orbit over signed `dt`.

    Returns (delta_L, status).  Continuous in dt; handles multiple periods.
    """
    rn = math.sqrt(r[0] ** 2 + r[1] ** 2 + r[2] ** 2)
    vn2 = v[0] ** 2 + v[1] ** 2 + v[2] ** 2
    alpha = 2.0 / rn - vn2 / mu
    if alpha <= 0.0:
        return 0.0, DEGENERATE  # not elliptic: no period
    a = 1.0 / alpha
    period = TWO_PI * math.sqrt(a * a * a / mu)
    nw = math.floor(dt / period)
    rem = dt - nw * period
    x0 = np.empty(6)
    x1 = np.empty(6)
    r1 = np.empty(3)
    v1 = np.empty(3)
    st = cart_to_mee(r, v, mu, x0)
    if st != OK:
        return 0.0, st
    st = kepler_universal(r, v, rem, mu, r1, v1)
    if st != OK:
        return 0.0, st
    st = cart_to_mee(r1, v1, mu, x1)
    if st != OK:
        return 0.0, st
    dl = x1[5] - x0[5]
    if dl < 0.0:
        dl += TWO_PI
    return TWO_PI * nw + dl, OK


# ---------------------------------------------------------------------------
# optimal control laws and Hamiltonians
# ---------------------------------------------------------------------------
@njit(cache=True)
def smoothed_throttle(rho, eps):
    """Interior throttle of the log-smoothed fuel problem, stable for large |rho|."""
    if rho.real >= 0.0:
        return 2.0 * eps / (rho + 2.0 * eps + np.sqrt(rho * rho + 4.0 * eps * eps))
    return (np.sqrt(rho * rho + 4.0 * eps * eps) - rho - 2.0 * eps) / (-2.0 * rho)


@njit(cache=True)
def control_and_rates(y, mu, tmax, vex, lam0, eps, mode, dydt, work):
    """Augmented dynamics: y = [mee(6), m, lam_x(6), lam_m] -> dy/dt.

    mode 0: smoothed fuel-optimal throttle; mode 1: full throttle
    (time-optimal).  Generic over float64/complex128 so shooting
    derivatives can be taken by complex step.  Also returns
    (u, switching rho, ||M^T lam_x||).
    """
    x = y[:6]
    m = y[6]
    lx = y[7:13]
    lm = y[13]
    M = work[_W_M:_W_M + 18].reshape(6, 3)
    mee_matrix_m(x, mu, M)
    d6 = mee_d6(x, mu)
    # M^T lam_x
    mtl0 = mtl1 = mtl2 = y[0] * 0.0
    for i in range(6):
        mtl0 += M[i, 0] * lx[i]
        mtl1 += M[i, 1] * lx[i]
        mtl2 += M[i, 2] * lx[i]
    # analytic continuation of the Euclidean norm (not |.|, which would
    # destroy complex-step derivative information)
    nm = np.sqrt(mtl0 * mtl0 + mtl1 * mtl1 + mtl2 * mtl2)
    if nm.real > 0.0:
        a0, a1, a2 = -mtl0 / nm, -mtl1 / nm, -mtl2 / nm
    else:
        a0 = a1 = a2 = y[0] * 0.0
    rho = 1.0 - vex * nm / (lam0 * m) - lm / lam0
    if mode == MODE_TIME:
        u = 1.0 + y[0] * 0.0
    else:
        u = smoothed_throttle(rho, eps)
    acc = tmax * u / m
    for i in range(6):
        dydt[i] = acc * (M[i, 0] * a0 + M[i, 1] * a1 + M[i, 2] * a2)
    dydt[5] += d6
    dydt[6] = -tmax * u / vex
    # costate rates
    dM = work[_W_DM:_W_DM + 108].reshape(6, 6, 3)
    mee_m_partials(x, mu, dM)
    dgrad = work[_W_DG:_W_DG + 6]
    mee_d6_grad(x, mu, dgrad)
    lL = lx[5]
    for c in range(6):
        s = y[0] * 0.0
        for i in range(6):
            s += lx[i] * (dM[c, i, 0] * a0 + dM[c, i, 1] * a1 + dM[c, i, 2] * a2)
        dydt[7 + c] = -(acc * s + lL * dgrad[c])
    dydt[13] = -(tmax * u / (m * m)) * nm  # lam_x . M alpha = -||M^T lam_x||
    return u, rho, nm


@njit(cache=True)
def hamiltonian(y, mu, tmax, vex, lam0, eps, mode, work):
    """Hamiltonian evaluated at the pointwise-optimal control."""
    x = y[:6]
    m = y[6]
    lx = y[7:13]
    lm = y[13]
    M = work[_W_M:_W_M + 18].reshape(6, 3)
    mee_matrix_m(x, mu, M)
    d6 = mee_d6(x, mu)
    mtl0 = mtl1 = mtl2 = y[0] * 0.0
    for i in range(6):
        mtl0 += M[i, 0] * lx[i]
        mtl1 += M[i, 1] * lx[i]
        mtl2 += M[i, 2] * lx[i]
    nm = np.sqrt(mtl0 * mtl0 + mtl1 * mtl1 + mtl2 * mtl2)
    lxd = lx[5] * d6
    if mode == MODE_TIME:
        return -tmax / m * nm + lxd - lm * tmax / vex + lam0
    rho = 1.0 - vex * nm / (lam0 * m) - lm / lam0
    u = smoothed_throttle(rho, eps)
    run = u - eps * np.log(u * (1.0 - u))
    return -tmax / m * nm * u + lxd - lm * tmax / vex * u + lam0 * tmax / vex * run


# ---------------------------------------------------------------------------
# RKF7(8) adaptive integrator for the augmented dynamics
# ---------------------------------------------------------------------------
_RK_C = np.array([0.0, 2.0 / 27.0, 1.0 / 9.0, 1.0 / 6.0, 5.0 / 12.0, 0.5,
                  5.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0, 1.0 / 3.0, 1.0, 0.0, 1.0])

_RK_A = np.zeros((13, 13))
_RK_A[1, 0] = 2.0 / 27.0
_RK_A[2, 0] = 1.0 / 36.0
_RK_A[2, 1] = 1.0 / 12.0
_RK_A[3, 0] = 1.0 / 24.0
_RK_A[3, 2] = 1.0 / 8.0
_RK_A[4, 0] = 5.0 / 12.0
_RK_A[4, 2] = -25.0 / 16.0
_RK_A[4, 3] = 25.0 / 16.0
_RK_A[5, 0] = 1.0 / 20.0
_RK_A[5, 3] = 0.25
_RK_A[5, 4] = 0.2
_RK_A[6, 0] = -25.0 / 108.0
_RK_A[6, 3] = 125.0 / 108.0
_RK_A[6, 4] = -65.0 / 27.0
_RK_A[6, 5] = 125.0 / 54.0
_RK_A[7, 0] = 31.0 / 300.0
_RK_A[7, 4] = 61.0 / 225.0
_RK_A[7, 5] = -2.0 / 9.0
_RK_A[7, 6] = 13.0 / 900.0
_RK_A[8, 0] = 2.0
_RK_A[8, 3] = -53.0 / 6.0
_RK_A[8, 4] = 704.0 / 45.0
_RK_A[8, 5] = -107.0 / 9.0
_RK_A[8, 6] = 67.0 / 90.0
_RK_A[8, 7] = 3.0
_RK_A[9, 0] = -91.0 / 108.0
_RK_A[9, 3] = 23.0 / 108.0
_RK_A[9, 4] = -976.0 / 135.0
_RK_A[9, 5] = 311.0 / 54.0
_RK_A[9, 6] = -19.0 / 60.0
_RK_A[9, 7] = 17.0 / 6.0
_RK_A[9, 8] = -1.0 / 12.0
_RK_A[10, 0] = 2383.0 / 4100.0
_RK_A[10, 3] = -341.0 / 164.0
_RK_A[10, 4] = 4496.0 / 1025.0
_RK_A[10, 5] = -301.0 / 82.0
_RK_A[10, 6] = 2133.0 / 4100.0
_RK_A[10, 7] = 45.0 / 82.0
_RK_A[10, 8] = 45.0 / 164.0
_RK_A[10, 9] = 18.0 / 41.0
_RK_A[11, 0] = 3.0 / 205.0
_RK_A[11, 5] = -6.0 / 41.0
_RK_A[11, 6] = -3.0 / 205.0
_RK_A[11, 7] = -3.0 / 41.0
_RK_A[11, 8] = 3.0 / 41.0
_RK_A[11, 9] = 6.0 / 41.0
_RK_A[12, 0] = -1777.0 / 4100.0
_RK_A[12, 3] = -341.0 / 164.0
_RK_A[12, 4] = 4496.0 / 1025.0
_RK_A[12, 5] = -289.0 / 82.0
_RK_A[12, 6] = 2193.0 / 4100.0
_RK_A[12, 7] = 51.0 / 82.0
_RK_A[12, 8] = 33.0 / 164.0
_RK_A[12, 9] = 12.0 / 41.0
_RK_A[12, 11] = 1.0

# eighth-order weights (propagated solution, local extrapolation)
_RK_B8 = np.array([0.0, 0.0, 0.0, 0.0, 0.0, 34.0 / 105.0, 9.0 / 35.0, 9.0 / 35.0,
                   9.0 / 280.0, 9.0 / 280.0, 0.0, 41.0 / 840.0, 41.0 / 840.0])
# difference to the embedded seventh-order solution, used as error estimate
_RK_EC = 41.0 / 840.0


@njit(cache=True)
def rk78_integrate(y0, t0, t1, mu, tmax, vex, lam0, eps, mode,
                   rtol, atol, t_eval, y_eval, work):
    """Integrate the augmented dynamics from t0 to t1 (t1 > t0).

    Solution samples are produced at the strictly increasing times `t_eval`
    (each must lie in [t0, t1]); steps are clipped to land on them exactly.
    `y_eval` has shape (len(t_eval), 14).  `work` must be a WORKSPACE-sized
    scratch array of the same dtype as y0 (float64 or complex128; the
    latter enables complex-step differentiation with an identical step
    sequence, since error control sees only the real magnitudes).
    Returns a status code.
    """
    n = y0.shape[0]
    y = work[_W_Y:_W_Y + n]
    for i in range(n):
        y[i] = y0[i]
    t = t0
    span = t1 - t0
    if span <= 0.0:
        for q in range(t_eval.shape[0]):
            for i in range(n):
                y_eval[q, i] = y[i]
        return OK
    k = work[_W_K:_W_K + 13 * n].reshape(13, n)
    ytmp = work[_W_YT:_W_YT + n]
    ynew = work[_W_YN:_W_YN + n]
    ie = 0
    u0, _, _ = control_and_rates(y, mu, tmax, vex, lam0, eps, mode, k[0], work)
    while ie < t_eval.shape[0] and t_eval[ie] <= t0:
        for i in range(n):
            y_eval[ie, i] = y[i]
        ie += 1
    # initial step: a small fraction of the span, refined by the controller
    h = span * 1e-3
    hmin = span * 1e-14
    nstep = 0
    while t < t1:
        if nstep > 1_000_000:
            return NO_CONVERGENCE
        nstep += 1
        clipped = False
        if ie < t_eval.shape[0] and t + h >= t_eval[ie]:
            h = t_eval[ie] - t
            clipped = True
        if t + h > t1:
            h = t1 - t
            clipped = True
        if h < hmin:
            if clipped:
                h = hmin  # sample time essentially reached; take the sliver step
            else:
                return STEP_UNDERFLOW
        umin = umax = u0.real
        for s in range(1, 13):
            for i in range(n):
                acc = y[0] * 0.0
                for j in range(s):
                    aij = _RK_A[s, j]
                    if aij != 0.0:
                        acc += aij * k[j, i]
                ytmp[i] = y[i] + h * acc
            us, _, _ = control_and_rates(ytmp, mu, tmax, vex, lam0, eps, mode,
                                         k[s], work)
            if us.real < umin:
                umin = us.real
            elif us.real > umax:
                umax = us.real
        errmax = 0.0
        for i in range(n):
            acc = y[0] * 0.0
            for j in range(13):
                bj = _RK_B8[j]
                if bj != 0.0:
                    acc += bj * k[j, i]
            ynew[i] = y[i] + h * acc
            erri = h * _RK_EC * (k[0, i] + k[10, i] - k[11, i] - k[12, i])
            sc = atol + rtol * max(abs(y[i]), abs(ynew[i]))
            e = abs(erri) / sc
            if e > errmax:
                errmax = e
        if not math.isfinite(errmax):
            return STEP_UNDERFLOW
        if mode == MODE_FUEL and umax - umin > 0.25 and h > 64.0 * hmin:
            # a smoothed throttle switch inside the step: the embedded error
            # estimate cannot see it, so force the step to resolve it
            e_u = ((umax - umin) / 0.25) ** 8
            if e_u > errmax:
                errmax = e_u
        if errmax <= 1.0:
            t = t + h
            for i in range(n):
                y[i] = ynew[i]
            while ie < t_eval.shape[0] and t >= t_eval[ie] - hmin:
                for i in range(n):
                    y_eval[ie, i] = y[i]
                ie += 1
            u0, _, _ = control_and_rates(y, mu, tmax, vex, lam0, eps, mode,
                                         k[0], work)
            if errmax > 0.0:
                fac = 0.9 * errmax ** (-0.125)
                if fac > 4.0:
                    fac = 4.0
                h *= fac
            else:
                h *= 4.0
        else:
            fac = 0.9 * errmax ** (-0.125)
            if fac < 0.1:
                fac = 0.1
            h *= fac
    while ie < t_eval.shape[0]:
        for i in range(n):
            y_eval[ie, i] = y[i]
        ie += 1
    return OK


# ---------------------------------------------------------------------------
# canonical rotation (departure position to +x, arrival into the xy-plane)
# ---------------------------------------------------------------------------
@njit(cache=True)
def _rotation_between(a, b, out):
    """Proper rotation taking unit vector a to unit vector b (Rodrigues)."""
    vx = a[1] * b[2] - a[2] * b[1]
    vy = a[2] * b[0] - a[0] * b[2]
    vz = a[0] * b[1] - a[1] * b[0]
    c = a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
    s2 = vx * vx + vy * vy + vz * vz
    if s2 < 1e-28:
        if c > 0.0:
            for i in range(3):
                for j in range(3):
                    out[i, j] = 1.0 if i == j else 0.0
            return
        # antiparallel: rotate pi about an axis orthogonal to a
        mx = a[1] * 0.0 - a[2] * 0.0
        # pick the coordinate axis least aligned with a
        if abs(a[0]) <= abs(a[1]) and abs(a[0]) <= abs(a[2]):
            px, py, pz = 1.0, 0.0, 0.0
        elif abs(a[1]) <= abs(a[2]):
            px, py, pz = 0.0, 1.0, 0.0
        else:
            px, py, pz = 0.0, 0.0, 1.0
        mx = py * a[2] - pz * a[1]
        my = pz * a[0] - px * a[2]
        mz = px * a[1] - py * a[0]
        mn = math.sqrt(mx * mx + my * my + mz * mz)
        mx, my, mz = mx / mn, my / mn, mz / mn
        out[0, 0] = 2.0 * mx * mx - 1.0
        out[0, 1] = 2.0 * mx * my
        out[0, 2] = 2.0 * mx * mz
        out[1, 0] = 2.0 * my * mx
        out[1, 1] = 2.0 * my * my - 1.0
        out[1, 2] = 2.0 * my * mz
        out[2, 0] = 2.0 * mz * mx
        out[2, 1] = 2.0 * mz * my
        out[2, 2] = 2.0 * mz * mz - 1.0
        return
    fac = (1.0 - c) / s2
    out[0, 0] = 1.0 + fac * (-vz * vz - vy * vy)
    out[0, 1] = -vz + fac * vx * vy
    out[0, 2] = vy + fac * vx * vz
    out[1, 0] = vz + fac * vx * vy
    out[1, 1] = 1.0 + fac * (-vx * vx - vz * vz)
    out[1, 2] = -vx + fac * vy * vz
    out[2, 0] = -vy + fac * vx * vz
    out[2, 1] = vx + fac * vy * vz
    out[2, 2] = 1.0 + fac * (-vy * vy - vx * vx)


@njit(cache=True)
def canonical_rotation(r1, v1, r2, out):
    """Frame that maps r1 to +x, r2 into the xy-plane and v1 to y >= 0.

    The x-rotation angle comes from the in-plane part of v1 (its component
    along the transfer-plane normal is discarded for the angle only).
    Returns a status code; `out` is the 3x3 rotation.
    """
    r1n = math.sqrt(r1[0] ** 2 + r1[1] ** 2 + r1[2] ** 2)
    r2n = math.sqrt(r2[0] ** 2 + r2[1] ** 2 + r2[2] ** 2)
    nx = r1[1] * r2[2] - r1[2] * r2[1]
    ny = r1[2] * r2[0] - r1[0] * r2[2]
    nz = r1[0] * r2[1] - r1[1] * r2[0]
    nn = math.sqrt(nx * nx + ny * ny + nz * nz)
    if nn < 1e-12 * r1n * r2n:
        return DEGENERATE
    nx, ny, nz = nx / nn, ny / nn, nz / nn
    vdotn = v1[0] * nx + v1[1] * ny + v1[2] * nz
    wx = v1[0] - vdotn * nx
    wy = v1[1] - vdotn * ny
    wz = v1[2] - vdotn * nz
    a = np.empty(3)
    b = np.empty(3)
    for i in range(3):
        a[i] = r1[i] / r1n
    b[0], b[1], b[2] = 1.0, 0.0, 0.0
    R1 = np.empty((3, 3))
    _rotation_between(a, b, R1)
    # intermediate images
    wy1 = R1[1, 0] * wx + R1[1, 1] * wy + R1[1, 2] * wz
    wz1 = R1[2, 0] * wx + R1[2, 1] * wy + R1[2, 2] * wz
    v1n = math.sqrt(v1[0] ** 2 + v1[1] ** 2 + v1[2] ** 2)
    if math.hypot(wy1, wz1) > 1e-12 * max(v1n, 1e-300):
        phi = -math.atan2(wz1, wy1)
    else:
        # in-plane velocity is radial: orient using r2, break ties with v2's image
        r2y = R1[1, 0] * r2[0] + R1[1, 1] * r2[1] + R1[1, 2] * r2[2]
        r2z = R1[2, 0] * r2[0] + R1[2, 1] * r2[1] + R1[2, 2] * r2[2]
        phi = -math.atan2(r2z, r2y)
    cp = math.cos(phi)
    sp = math.sin(phi)
    for j in range(3):
        out[0, j] = R1[0, j]
        out[1, j] = cp * R1[1, j] - sp * R1[2, j]
        out[2, j] = sp * R1[1, j] + cp * R1[2, j]
    return OK


# ---------------------------------------------------------------------------
# Lambert problem (universal variable, multi-revolution)
# ---------------------------------------------------------------------------
@njit(cache=True)
def _lambert_tof(z, rsum, A, mu):
    """Time of flight at universal parameter z; -1 where y(z) is invalid."""
    c, s = stumpff(z)
    if c <= 0.0:
        return -1.0
    y = rsum + A * (z * s - 1.0) / math.sqrt(c)
    if y < 0.0:
        return -1.0
    chi = math.sqrt(y / c)
    return (chi * chi * chi * s + A * math.sqrt(y)) / math.sqrt(mu)


@njit(cache=True)
def _lambert_bisect(zlo, zhi, rsum, A, mu, dt, increasing):
    """Bisection for TOF(z) = dt on a monotone interval."""
    for _ in range(200):
        zm = 0.5 * (zlo + zhi)
        tm = _lambert_tof(zm, rsum, A, mu)
        if tm < 0.0:
            # invalid region can only touch the low end of a monotone branch
            zlo = zm
            continue
        if abs(tm - dt) <= 1e-11 * dt:
            return zm, OK
        if (tm < dt) == increasing:
            zlo = zm
        else:
            zhi = zm
        if zhi - zlo < 1e-13 * max(1.0, abs(zhi)):
            return 0.5 * (zlo + zhi), OK
    return 0.5 * (zlo + zhi), OK


@njit(cache=True)
def lambert_universal(r1, r2, dt, mu, revs, branch, retrograde, v1out, v2out):
    """Solve the Lambert problem; branch 0 = short-period, 1 = long-period.

    The transfer angle is measured counterclockwise about +z (prograde) or
    clockwise (retrograde).  Returns a status code.
    """
    if dt <= 0.0:
        return NO_SOLUTION
    r1n = math.sqrt(r1[0] ** 2 + r1[1] ** 2 + r1[2] ** 2)
    r2n = math.sqrt(r2[0] ** 2 + r2[1] ** 2 + r2[2] ** 2)
    cx = r1[1] * r2[2] - r1[2] * r2[1]
    cy = r1[2] * r2[0] - r1[0] * r2[2]
    cz = r1[0] * r2[1] - r1[1] * r2[0]
    cn = math.sqrt(cx * cx + cy * cy + cz * cz)
    if cn < 1e-12 * r1n * r2n:
        return DEGENERATE
    cosdth = (r1[0] * r2[0] + r1[1] * r2[1] + r1[2] * r2[2]) / (r1n * r2n)
    if cosdth > 1.0:
        cosdth = 1.0
    elif cosdth < -1.0:
        cosdth = -1.0
    dth = math.acos(cosdth)
    if retrograde == 0:
        if cz < 0.0:
            dth = TWO_PI - dth
    else:
        if cz >= 0.0:
            dth = TWO_PI - dth
    A = math.sin(dth) * math.sqrt(r1n * r2n / (1.0 - math.cos(dth)))
    if abs(A) < 1e-14 * (r1n + r2n):
        return DEGENERATE
    rsum = r1n + r2n
    if revs == 0:
        zhi = 4.0 * math.pi * math.pi - 1e-8
        zlo = -64.0 * math.pi * math.pi
        tlo = _lambert_tof(zlo, rsum, A, mu)
        while tlo >= dt and zlo > -1e8:
            zlo *= 4.0
            tlo = _lambert_tof(zlo, rsum, A, mu)
        if tlo < 0.0:
            # push up to the validity boundary (y >= 0)
            lo, hi = zlo, zhi
            for _ in range(120):
                zm = 0.5 * (lo + hi)
                if _lambert_tof(zm, rsum, A, mu) < 0.0:
                    lo = zm
                else:
                    hi = zm
            zlo = hi
        z, st = _lambert_bisect(zlo, zhi, rsum, A, mu, dt, True)
        if st != OK:
            return st
    else:
        base = TWO_PI * revs
        top = TWO_PI * (revs + 1)
        zlo = base * base * (1.0 + 1e-10) + 1e-12
        zhi = top * top * (1.0 - 1e-10)
        # unimodal TOF: golden-section for the minimum
        gr = 0.5 * (math.sqrt(5.0) - 1.0)
        a_, b_ = zlo, zhi
        c_ = b_ - gr * (b_ - a_)
        d_ = a_ + gr * (b_ - a_)
        fc = _lambert_tof(c_, rsum, A, mu)
        fd = _lambert_tof(d_, rsum, A, mu)
        for _ in range(160):
            if fc < fd:
                b_, d_, fd = d_, c_, fc
                c_ = b_ - gr * (b_ - a_)
                fc = _lambert_tof(c_, rsum, A, mu)
            else:
                a_, c_, fc = c_, d_, fd
                d_ = a_ + gr * (b_ - a_)
                fd = _lambert_tof(d_, rsum, A, mu)
        zstar = 0.5 * (a_ + b_)
        tmin = _lambert_tof(zstar, rsum, A, mu)
        if tmin < 0.0 or tmin > dt:
            return NO_SOLUTION
        if branch == 1:  # long-period: left of the minimum, TOF decreasing
            z, st = _lambert_bisect(zlo, zstar, rsum, A, mu, dt, False)
        else:
            z, st = _lambert_bisect(zstar, zhi, rsum, A, mu, dt, True)
        if st != OK:
            return st
    c, s = stumpff(z)
    y = rsum + A * (z * s - 1.0) / math.sqrt(c)
    if y < 0.0:
        return NO_CONVERGENCE
    fl = 1.0 - y / r1n
    gl = A * math.sqrt(y / mu)
    gdot = 1.0 - y / r2n
    if gl == 0.0:
        return DEGENERATE
    # confirm the root actually matched the requested time of flight
    tchk = _lambert_tof(z, rsum, A, mu)
    if abs(tchk - dt) > 1e-8 * dt:
        return NO_CONVERGENCE
    for i in range(3):
        v1out[i] = (r2[i] - fl * r1[i]) / gl
        v2out[i] = (gdot * r2[i] - r1[i]) / gl
    return OK


@njit(cache=True)
def lambert_best_branch(r1, r2, dt, mu, revs, v1out, v2out, v1ref, v2ref,
                        retrograde=0):
    """Lambert solution minimising |v1-v1ref| + |v2ref-v2| over branches.

    For revs >= 1 both period branches are attempted and the cheaper one
    (two-impulse cost against the reference velocities) is kept.
    Returns a status code.
    """
    if revs == 0:
        return lambert_universal(r1, r2, dt, mu, 0, 0, retrograde, v1out, v2out)
    va = np.empty(3)
    vb = np.empty(3)
    best = -1.0
    status = NO_SOLUTION
    for branch in range(2):
        st = lambert_universal(r1, r2, dt, mu, revs, branch, retrograde, va, vb)
        if st != OK:
            if status != OK:
                status = st
            continue
        cost = 0.0
        c1 = c2 = 0.0
        for i in range(3):
            c1 += (va[i] - v1ref[i]) ** 2
            c2 += (vb[i] - v2ref[i]) ** 2
        cost = math.sqrt(c1) + math.sqrt(c2)
        if status != OK or cost < best:
            best = cost
            status = OK
            for i in range(3):
                v1out[i] = va[i]
                v2out[i] = vb[i]
    return status


# ---------------------------------------------------------------------------
# classical orbital elements
# ---------------------------------------------------------------------------
@njit(cache=True)
def cart_to_coe(r, v, mu, out):
    """Cartesian to (a, e, i, raan, argp, nu); standard degeneracy conventions."""
    rn = math.sqrt(r[0] ** 2 + r[1] ** 2 + r[2] ** 2)
    vn2 = v[0] ** 2 + v[1] ** 2 + v[2] ** 2
    hx = r[1] * v[2] - r[2] * v[1]
    hy = r[2] * v[0] - r[0] * v[2]
    hz = r[0] * v[1] - r[1] * v[0]
    hn = math.sqrt(hx * hx + hy * hy + hz * hz)
    if hn < 1e-14 or rn == 0.0:
        return DEGENERATE
    energy = 0.5 * vn2 - mu / rn
    if abs(energy) < 1e-14 * mu / rn:
        return DEGENERATE  # parabolic
    a = -mu / (2.0 * energy)
    rdv = r[0] * v[0] + r[1] * v[1] + r[2] * v[2]
    ex = (v[1] * hz - v[2] * hy) / mu - r[0] / rn
    ey = (v[2] * hx - v[0] * hz) / mu - r[1] / rn
    ez = (v[0] * hy - v[1] * hx) / mu - r[2] / rn
    e = math.sqrt(ex * ex + ey * ey + ez * ez)
    ci = hz / hn
    if ci > 1.0:
        ci = 1.0
    elif ci < -1.0:
        ci = -1.0
    inc = math.acos(ci)
    # node vector
    nx = -hy
    ny = hx
    nn = math.sqrt(nx * nx + ny * ny)
    if nn > 1e-12 * hn:
        raan = math.atan2(ny, nx)
        if raan < 0.0:
            raan += TWO_PI
    else:
        raan = 0.0
        nx, ny = 1.0, 0.0
        nn = 1.0
    if e > 1e-12:
        if nn > 1e-12 * hn or True:
            cosw = (nx * ex + ny * ey) / (nn * e)
            if cosw > 1.0:
                cosw = 1.0
            elif cosw < -1.0:
                cosw = -1.0
            argp = math.acos(cosw)
            if ez < 0.0:
                argp = TWO_PI - argp
            if inc < 1e-12 and abs(ez) < 1e-14:
                argp = math.atan2(ey, ex)
                if argp < 0.0:
                    argp += TWO_PI
        cosnu = (ex * r[0] + ey * r[1] + ez * r[2]) / (e * rn)
        if cosnu > 1.0:
            cosnu = 1.0
        elif cosnu < -1.0:
            cosnu = -1.0
        nu = math.acos(cosnu)
        if rdv < 0.0:
            nu = TWO_PI - nu
    else:
        argp = 0.0
        # circular: true anomaly measured from the node line
        cosu = (nx * r[0] + ny * r[1]) / (nn * rn)
        if cosu > 1.0:
            cosu = 1.0
        elif cosu < -1.0:
            cosu = -1.0
        nu = math.acos(cosu)
        if r[2] < 0.0 or (inc < 1e-12 and r[1] < 0.0):
            nu = TWO_PI - nu
    out[0] = a
    out[1] = e
    out[2] = inc
    out[3] = raan
    out[4] = argp
    out[5] = nu
    return OK


# ---------------------------------------------------------------------------
# self-similar feature blocks
# ---------------------------------------------------------------------------
# Block layout (all values dimensionless, geometry in the canonical frame):
#  0:2   v1'            3:4  r2'_x, r2'_y       5:7  v2'
#  8     transfer-orbit eccentricity            9    transfer true anomaly at departure
# 10:12  dv1 cartesian  13:15 dv2 cartesian
# 16:18  dv1 radial/transverse/normal           19:21 dv2 radial/transverse/normal
# 22     (|dv1|+|dv2|)/a_s
# 23     dt             24   a_s                25   exhaust velocity (Isp g0 / V0)
# 26:31  mee of endpoint 1                      32:37 mee of endpoint 2
# 38:43  coe of endpoint 1                      44:49 coe of endpoint 2
# 50:52  r1-r2          53:55 v1-v2
# 56:67  unrotated r1, v1, r2, v2
NBLOCK = 68


@njit(cache=True)
def _sph_components(rr, vv, dv, out, off):
    """Radial / transverse / orbit-normal components of dv at an endpoint."""
    rn = math.sqrt(rr[0] ** 2 + rr[1] ** 2 + rr[2] ** 2)
    erx, ery, erz = rr[0] / rn, rr[1] / rn, rr[2] / rn
    hx = rr[1] * vv[2] - rr[2] * vv[1]
    hy = rr[2] * vv[0] - rr[0] * vv[2]
    hz = rr[0] * vv[1] - rr[1] * vv[0]
    hn = math.sqrt(hx * hx + hy * hy + hz * hz)
    if hn < 1e-12 * rn * math.sqrt(vv[0] ** 2 + vv[1] ** 2 + vv[2] ** 2):
        return DEGENERATE
    enx, eny, enz = hx / hn, hy / hn, hz / hn
    etx = eny * erz - enz * ery
    ety = enz * erx - enx * erz
    etz = enx * ery - eny * erx
    out[off] = dv[0] * erx + dv[1] * ery + dv[2] * erz
    out[off + 1] = dv[0] * etx + dv[1] * ety + dv[2] * etz
    out[off + 2] = dv[0] * enx + dv[1] * eny + dv[2] * enz
    return OK


@njit(cache=True)
def feature_blocks(r1, v1, r2, v2, dt, mu, a_s, vex, revs, out):
    """Compute every dimensionless feature block for one transfer.

    Inputs are dimensional; a_s = T_max/m0 and vex = Isp*g0.  Returns a
    status code; on failure the Lambert-dependent entries are NaN but the
    geometric blocks are still filled when possible.
    """
    for q in range(NBLOCK):
        out[q] = np.nan
    L0 = math.sqrt(r1[0] ** 2 + r1[1] ** 2 + r1[2] ** 2)
    if L0 <= 0.0:
        return DEGENERATE
    T0 = math.sqrt(L0 * L0 * L0 / mu)
    V0 = L0 / T0
    A0 = L0 / (T0 * T0)
    R = np.empty((3, 3))
    st = canonical_rotation(r1, v1, r2, R)
    if st != OK:
        return st
    r1r = np.empty(3)
    v1r = np.empty(3)
    r2r = np.empty(3)
    v2r = np.empty(3)
    for i in range(3):
        r1r[i] = (R[i, 0] * r1[0] + R[i, 1] * r1[1] + R[i, 2] * r1[2]) / L0
        v1r[i] = (R[i, 0] * v1[0] + R[i, 1] * v1[1] + R[i, 2] * v1[2]) / V0
        r2r[i] = (R[i, 0] * r2[0] + R[i, 1] * r2[1] + R[i, 2] * r2[2]) / L0
        v2r[i] = (R[i, 0] * v2[0] + R[i, 1] * v2[1] + R[i, 2] * v2[2]) / V0
    dtn = dt / T0
    asn = a_s / A0
    vexn = vex / V0
    out[0], out[1], out[2] = v1r[0], v1r[1], v1r[2]
    out[3], out[4] = r2r[0], r2r[1]
    out[5], out[6], out[7] = v2r[0], v2r[1], v2r[2]
    out[23] = dtn
    out[24] = asn
    out[25] = vexn
    x1 = np.empty(6)
    x2 = np.empty(6)
    st1 = cart_to_mee(r1r, v1r, 1.0, x1)
    st2 = cart_to_mee(r2r, v2r, 1.0, x2)
    if st1 != OK or st2 != OK:
        return DEGENERATE
    for i in range(6):
        out[26 + i] = x1[i]
        out[32 + i] = x2[i]
    c1 = np.empty(6)
    c2 = np.empty(6)
    if cart_to_coe(r1r, v1r, 1.0, c1) == OK:
        for i in range(6):
            out[38 + i] = c1[i]
    if cart_to_coe(r2r, v2r, 1.0, c2) == OK:
        for i in range(6):
            out[44 + i] = c2[i]
    for i in range(3):
        out[50 + i] = r1r[i] - r2r[i]
        out[53 + i] = v1r[i] - v2r[i]
    out[56], out[57], out[58] = r1[0] / L0, r1[1] / L0, r1[2] / L0
    out[59], out[60], out[61] = v1[0] / V0, v1[1] / V0, v1[2] / V0
    out[62], out[63], out[64] = r2[0] / L0, r2[1] / L0, r2[2] / L0
    out[65], out[66], out[67] = v2[0] / V0, v2[1] / V0, v2[2] / V0
    # Lambert reference transfer (canonical frame, mu = 1)
    v1l = np.empty(3)
    v2l = np.empty(3)
    st = lambert_best_branch(r1r, r2r, dtn, 1.0, revs, v1l, v2l, v1r, v2r)
    if st != OK:
        return st
    dv1 = np.empty(3)
    dv2 = np.empty(3)
    for i in range(3):
        dv1[i] = v1l[i] - v1r[i]
        dv2[i] = v2r[i] - v2l[i]
        out[10 + i] = dv1[i]
        out[13 + i] = dv2[i]
    if _sph_components(r1r, v1r, dv1, out, 16) != OK:
        return DEGENERATE
    if _sph_components(r2r, v2r, dv2, out, 19) != OK:
        return DEGENERATE
    # transfer-orbit shape at departure
    ct = np.empty(6)
    if cart_to_coe(r1r, v1l, 1.0, ct) == OK:
        out[8] = ct[1]
        out[9] = ct[5]
    else:
        out[8] = 0.0
        out[9] = 0.0
    n1 = math.sqrt(dv1[0] ** 2 + dv1[1] ** 2 + dv1[2] ** 2)
    n2 = math.sqrt(dv2[0] ** 2 + dv2[1] ** 2 + dv2[2] ** 2)
    out[22] = (n1 + n2) / asn
    return OK


@njit(cache=True)
def feature_blocks_batch(r1, v1, r2, v2, dt, mu, a_s, vex, revs, out, status):
    """Row-wise feature blocks; arrays are (n,3)/(n,) and out is (n, NBLOCK)."""
    n = dt.shape[0]
    for q in range(n):
        status[q] = feature_blocks(r1[q], v1[q], r2[q], v2[q], dt[q], mu[q],
                                   a_s[q], vex[q], revs[q], out[q])
