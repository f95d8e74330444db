"""Scratch validation of kernels (not part of the package)."""
import time
import numpy as np
from lowthrust import _kernels as K

rng = np.random.default_rng(0)

t0 = time.time()
# --- conversions round trip ---
errs = []
for _ in range(2000):
    # random elliptic orbit
    a = rng.uniform(0.5, 3.0)
    e = rng.uniform(0, 0.8)
    inc = rng.uniform(0, 0.9 * np.pi)
    Om, om, nu = rng.uniform(0, 2 * np.pi, 3)
    p = a * (1 - e**2)
    ff = e * np.cos(om + Om)
    gg = e * np.sin(om + Om)
    hh = np.tan(inc / 2) * np.cos(Om)
    kk = np.tan(inc / 2) * np.sin(Om)
    L = (om + Om + nu) % (2 * np.pi)
    x = np.array([p, ff, gg, hh, kk, L])
    r = np.empty(3); v = np.empty(3); x2 = np.empty(6)
    K.mee_to_cart(x, 1.0, r, v)
    st = K.cart_to_mee(r, v, 1.0, x2)
    assert st == 0, (st, x)
    errs.append(np.max(np.abs(x - x2) / np.maximum(1e-8, np.abs(x))))
    # |r| = p/w check
    w = 1 + ff * np.cos(L) + gg * np.sin(L)
    assert abs(np.linalg.norm(r) - p / w) < 1e-12 * p
print("mee<->cart roundtrip max rel err:", max(errs))

# --- kepler universal: circular orbit full period ---
r0 = np.array([1.0, 0, 0]); v0 = np.array([0, 1.0, 0])
r1 = np.empty(3); v1 = np.empty(3)
st = K.kepler_universal(r0, v0, 2 * np.pi, 1.0, r1, v1)
print("kepler circ full period:", st, np.abs(r1 - r0).max(), np.abs(v1 - v0).max())

# vs scipy for random states incl hyperbolic
from scipy.integrate import solve_ivp
def twobody(t, y):
    r = y[:3]; rn = np.linalg.norm(r)
    return np.concatenate([y[3:], -r / rn**3])
worst = 0
for _ in range(50):
    r0 = rng.normal(size=3); r0 /= np.linalg.norm(r0); r0 *= rng.uniform(0.7, 2)
    v0 = rng.normal(size=3) * 0.7
    if np.linalg.norm(np.cross(r0, v0)) < 0.1: continue
    dt = rng.uniform(0.1, 3.0)
    st = K.kepler_universal(r0, v0, dt, 1.0, r1, v1)
    assert st == 0
    sol = solve_ivp(twobody, (0, dt), np.concatenate([r0, v0]), rtol=1e-12, atol=1e-14)
    err = np.max(np.abs(np.concatenate([r1, v1]) - sol.y[:, -1]))
    worst = max(worst, err)
print("kepler vs ivp worst:", worst)

# negative dt
st = K.kepler_universal(r0, v0, -0.5, 1.0, r1, v1)
r2 = np.empty(3); v2 = np.empty(3)
st2 = K.kepler_universal(r1, v1, 0.5, 1.0, r2, v2)
print("kepler back-forth:", st, st2, np.abs(r2 - r0).max())

# --- RKF78 order check: integrate augmented dynamics with tiny thrust ---
x0 = np.empty(6)
K.cart_to_mee(np.array([1.0, 0, 0]), np.array([0, 1.0, 0]), 1.0, x0)
lam = rng.normal(size=7) * 0.3
y0 = np.concatenate([x0, [1.0], lam])
te = np.array([2.0])
ye = np.empty((1, 14))
st = K.rk78_integrate(y0, 0.0, 2.0, 1.0, 0.1, 1.5, 0.8, 1e-5, 0, 1e-10, 1e-12, te, ye, np.empty(K.WORKSPACE))
ref = ye[0].copy()
st = K.rk78_integrate(y0, 0.0, 2.0, 1.0, 0.1, 1.5, 0.8, 1e-5, 0, 1e-13, 1e-14, te, ye, np.empty(K.WORKSPACE))
ref13 = ye[0].copy()
print("rk78 status", st, "tol 1e-10 vs 1e-13 diff:", np.abs(ref - ref13).max())
# compare with scipy high-accuracy on same RHS
def rhs_py(t, y):
    out = np.empty(14)
    K.control_and_rates(y, 1.0, 0.1, 1.5, 0.8, 1e-5, 0, out, np.empty(K.WORKSPACE))
    return out
sol = solve_ivp(rhs_py, (0, 2.0), y0, rtol=1e-12, atol=1e-13, method="DOP853")
print("rk78 vs DOP853:", np.abs(ref13 - sol.y[:, -1]).max())

# Hamiltonian conservation along the arc
H0 = K.hamiltonian(y0, 1.0, 0.1, 1.5, 0.8, 1e-5, 0, np.empty(K.WORKSPACE))
H1 = K.hamiltonian(ref13, 1.0, 0.1, 1.5, 0.8, 1e-5, 0, np.empty(K.WORKSPACE))
print("H conservation:", abs(H1 - H0))

# --- M partials vs finite differences ---
def Mfun(x):
    out = np.empty((6, 3))
    K.mee_matrix_m(x, 1.0, out)
    return out
maxrel = 0
for _ in range(50):
    x = np.array([rng.uniform(0.5, 2), rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5),
                  rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(0, 2 * np.pi)])
    w = 1 + x[1] * np.cos(x[5]) + x[2] * np.sin(x[5])
    if w < 0.2: continue
    dM = np.empty((6, 6, 3)); K.mee_m_partials(x, 1.0, dM)
    for c in range(6):
        hstep = 1e-6 * max(abs(x[c]), 1.0)
        xp = x.copy(); xp[c] += hstep
        xm = x.copy(); xm[c] -= hstep
        fd = (Mfun(xp) - Mfun(xm)) / (2 * hstep)
        rel = np.max(np.abs(dM[c] - fd) / np.maximum(1e-6, np.abs(dM[c]) + np.abs(fd)))
        maxrel = max(maxrel, rel)
print("M partials vs FD:", maxrel)

def d6fun(x):
    return K.mee_d6(x, 1.0)
maxrel = 0
for _ in range(50):
    x = np.array([rng.uniform(0.5, 2), rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5),
                  rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(0, 2 * np.pi)])
    g6 = np.empty(6); K.mee_d6_grad(x, 1.0, g6)
    for c in range(6):
        hstep = 1e-6 * max(abs(x[c]), 1.0)
        xp = x.copy(); xp[c] += hstep
        xm = x.copy(); xm[c] -= hstep
        fd = (d6fun(xp) - d6fun(xm)) / (2 * hstep)
        maxrel = max(maxrel, abs(g6[c] - fd) / max(1e-6, abs(fd) + abs(g6[c])))
print("D6 grad vs FD:", maxrel)

# costate rates vs -dH/dx FD
maxrel = 0
for _ in range(30):
    x = np.array([rng.uniform(0.7, 1.5), rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3),
                  rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), rng.uniform(0, 2 * np.pi)])
    y = np.concatenate([x, [rng.uniform(0.5, 1.0)], rng.normal(size=7) * 0.5])
    lam0 = rng.uniform(0.3, 1.0)
    dy = np.empty(14)
    K.control_and_rates(y, 1.0, 0.2, 1.5, lam0, 1e-5, 0, dy, np.empty(K.WORKSPACE))
    for c in range(6):
        hstep = 1e-6 * max(abs(y[c]), 1.0)
        yp = y.copy(); yp[c] += hstep
        ym = y.copy(); ym[c] -= hstep
        fd = (K.hamiltonian(yp, 1.0, 0.2, 1.5, lam0, 1e-5, 0, np.empty(K.WORKSPACE)) -
              K.hamiltonian(ym, 1.0, 0.2, 1.5, lam0, 1e-5, 0, np.empty(K.WORKSPACE))) / (2 * hstep)
        rel = abs(dy[7 + c] + fd) / max(1e-8, abs(fd) + abs(dy[7 + c]))
        maxrel = max(maxrel, rel)
    # mass row
    hstep = 1e-6
    yp = y.copy(); yp[6] += hstep
    ym = y.copy(); ym[6] -= hstep
    fd = (K.hamiltonian(yp, 1.0, 0.2, 1.5, lam0, 1e-5, 0, np.empty(K.WORKSPACE)) -
          K.hamiltonian(ym, 1.0, 0.2, 1.5, lam0, 1e-5, 0, np.empty(K.WORKSPACE))) / (2 * hstep)
    maxrel = max(maxrel, abs(dy[13] + fd) / max(1e-8, abs(fd) + abs(dy[13])))
print("costate rates vs -dH/dx:", maxrel)

# --- Lambert ---
# quarter circle
r1v = np.array([1.0, 0, 0]); r2v = np.array([0, 1.0, 0])
v1o = np.empty(3); v2o = np.empty(3)
st = K.lambert_universal(r1v, r2v, np.pi / 2, 1.0, 0, 0, 0, v1o, v2o)
print("lambert quarter circle:", st, np.abs(v1o - [0, 1, 0]).max(), np.abs(v2o - [-1, 0, 0]).max())

# closure over random queries incl multirev
worst = 0; fails = 0
for _ in range(300):
    r1v = rng.normal(size=3); r1v /= np.linalg.norm(r1v); r1v *= rng.uniform(0.8, 1.5)
    r2v = rng.normal(size=3); r2v /= np.linalg.norm(r2v); r2v *= rng.uniform(0.8, 1.5)
    if np.linalg.norm(np.cross(r1v, r2v)) < 0.05: continue
    revs = rng.integers(0, 3)
    dt = rng.uniform(0.5, 3.0) + revs * 2 * np.pi * 1.2
    br = rng.integers(0, 2)
    st = K.lambert_universal(r1v, r2v, dt, 1.0, revs, br, 0, v1o, v2o)
    if st != 0:
        fails += 1
        continue
    rf = np.empty(3); vf = np.empty(3)
    K.kepler_universal(r1v, v1o, dt, 1.0, rf, vf)
    worst = max(worst, np.linalg.norm(rf - r2v) / np.linalg.norm(r2v))
    worst_v = np.linalg.norm(vf - v2o)
print("lambert closure worst rel:", worst, "fails:", fails, "/300")

# Keplerian pair -> lambert returns the orbit velocity
r0 = np.array([1.0, 0.1, -0.05]); v0 = np.array([0.1, 1.0, 0.2])
dt = 2.2
K.kepler_universal(r0, v0, dt, 1.0, r1, v1)
st = K.lambert_universal(r0, r1, dt, 1.0, 0, 0, 0, v1o, v2o)
print("keplerian identity:", st, np.abs(v1o - v0).max(), np.abs(v2o - v1).max())

# rotation checks
ok = True
for _ in range(200):
    r1v = rng.normal(size=3); v1v = rng.normal(size=3)
    r2v = rng.normal(size=3)
    if np.linalg.norm(np.cross(r1v, r2v)) < 1e-3: continue
    R = np.empty((3, 3))
    st = K.canonical_rotation(r1v, v1v, r2v, R)
    assert st == 0
    ortho = np.abs(R @ R.T - np.eye(3)).max()
    det = np.linalg.det(R)
    r1p = R @ r1v; r2p = R @ r2v; v1p = R @ v1v
    ok &= ortho < 1e-13 and abs(det - 1) < 1e-12
    ok &= abs(r1p[1]) < 1e-12 * np.linalg.norm(r1v) and abs(r1p[2]) < 1e-12 * np.linalg.norm(r1v)
    ok &= r1p[0] > 0
    ok &= abs(r2p[2]) < 1e-10 * np.linalg.norm(r2v)
    ok &= v1p[1] > -1e-12 * np.linalg.norm(v1v)
print("rotation invariants ok:", ok)

print("total time:", time.time() - t0)
