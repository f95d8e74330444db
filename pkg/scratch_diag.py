import numpy as np
from lowthrust import _kernels as K

rng = np.random.default_rng(0)

# 1) which component fails roundtrip and at what inclination
worst = (0, None)
for _ in range(4000):
    a = rng.uniform(0.5, 3.0)
    e = rng.uniform(0, 0.8)
    inc = rng.uniform(0, 0.9 * np.pi)
    Om, om, nu = rng.uniform(0, 2 * np.pi, 3)
    p = a * (1 - e**2)
    x = np.array([p, e * np.cos(om + Om), e * np.sin(om + Om),
                  np.tan(inc / 2) * np.cos(Om), np.tan(inc / 2) * np.sin(Om),
                  (om + Om + nu) % (2 * np.pi)])
    r = np.empty(3); v = np.empty(3); x2 = np.empty(6)
    K.mee_to_cart(x, 1.0, r, v)
    K.cart_to_mee(r, v, 1.0, x2)
    rel = np.abs(x - x2) / np.maximum(1e-8, np.abs(x))
    m = rel.max()
    if m > worst[0]:
        worst = (m, (inc, e, a, np.argmax(rel), x, x2))
print("worst roundtrip:", worst[0], "inc=", worst[1][0], "e=", worst[1][1], "comp=", worst[1][3])
print("x :", worst[1][4])
print("x2:", worst[1][5])

# 2) lambert failure statuses
from collections import Counter
cnt = Counter()
v1o = np.empty(3); v2o = np.empty(3)
for _ in range(300):
    r1v = rng.normal(size=3); r1v /= np.linalg.norm(r1v); r1v *= rng.uniform(0.8, 1.5)
    r2v = rng.normal(size=3); r2v /= np.linalg.norm(r2v); r2v *= rng.uniform(0.8, 1.5)
    if np.linalg.norm(np.cross(r1v, r2v)) < 0.05:
        continue
    revs = int(rng.integers(0, 3))
    dt = rng.uniform(0.5, 3.0) + revs * 2 * np.pi * 1.2
    br = int(rng.integers(0, 2))
    st = K.lambert_universal(r1v, r2v, dt, 1.0, revs, br, 0, v1o, v2o)
    cnt[(revs, st)] += 1
print("lambert status counts:", dict(cnt))

# 3) costate rate check with frozen control
def ham_frozen(y, alpha, u, mu, tmax, vex, lam0, eps):
    x = y[:6]; m = y[6]; lx = y[7:13]; lm = y[13]
    M = np.empty((6, 3)); K.mee_matrix_m(x, mu, M)
    d6 = K.mee_d6(x, mu)
    run = u - eps * np.log(u * (1 - u))
    return (tmax / m) * (lx @ (M @ alpha)) * u + lx[5] * d6 - lm * tmax / vex * u + lam0 * tmax / vex * run

maxrel = 0
for _ in range(100):
    x = np.array([rng.uniform(0.7, 1.5), rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3),
                  rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), rng.uniform(0, 2 * np.pi)])
    y = np.concatenate([x, [rng.uniform(0.5, 1.0)], rng.normal(size=7) * 0.5])
    lam0 = rng.uniform(0.3, 1.0)
    dy = np.empty(14)
    u, rho, nm = K.control_and_rates(y, 1.0, 0.2, 1.5, lam0, 1e-5, 0, dy)
    M = np.empty((6, 3)); K.mee_matrix_m(x, 1.0, M)
    alpha = -(M.T @ y[7:13]); alpha /= np.linalg.norm(alpha)
    for c in range(6):
        hstep = 1e-6 * max(abs(y[c]), 1.0)
        yp = y.copy(); yp[c] += hstep
        ym = y.copy(); ym[c] -= hstep
        fd = (ham_frozen(yp, alpha, u, 1.0, 0.2, 1.5, lam0, 1e-5) -
              ham_frozen(ym, alpha, u, 1.0, 0.2, 1.5, lam0, 1e-5)) / (2 * hstep)
        rel = abs(dy[7 + c] + fd) / max(1e-8, abs(fd) + abs(dy[7 + c]))
        maxrel = max(maxrel, rel)
print("costate rates vs frozen-control FD:", maxrel)
