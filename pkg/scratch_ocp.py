import time
import numpy as np
from lowthrust import _kernels as K
from lowthrust.problem import BoundaryConditions, PropulsionParams
from lowthrust.ocp import TransferProblem, solve_tpbvp, shoot_fuel
from lowthrust.constants import AU, MU_SUN, A0_1AU, V0_1AU
from lowthrust.astro import CartesianState, kepler_propagate

rng = np.random.default_rng(42)

# Keplerian seed near 1 AU
r1 = np.array([AU, 0, 0.0])
v1 = np.array([0, 29784.0, 3000.0])
dt = 0.6 * 365.25 * 86400
s2 = kepler_propagate(CartesianState(r1, v1), dt, MU_SUN)
bc0 = BoundaryConditions(r1=r1, v1=v1, r2=s2.r, v2=s2.v, dt=dt)
prop = PropulsionParams(t_max=0.3, isp=3000.0, m0=1000.0, mu=MU_SUN)
print("beta:", prop.a_s / A0_1AU)

t0 = time.time()
prob0 = TransferProblem(bc=bc0, prop=prop, formulation="fuel", n_rev=0)
sol0 = solve_tpbvp(prob0, rng=rng)
print("p=0 solve:", time.time() - t0, "s, dv =", sol0.dv, "m/s, resid", sol0.residual_norm,
      "mf frac", sol0.mass_fraction, "revs", sol0.revolutions)
print("dv_nd:", sol0.dv_nd, "vs 1e-6 limit; floor est:", prop.a_s / A0_1AU * 1e-5 * bc0.dt / (sol0.scales.T0))

# perturb the boundary velocities and warm start along a small ray
p = 300.0  # m/s
dvec = rng.normal(size=6)
dvec /= np.linalg.norm(dvec)
z = sol0.shooting_vector()
t0 = time.time()
nsteps = 12
for i in range(1, nsteps + 1):
    pi = p * i / nsteps
    bc = BoundaryConditions(r1=r1, v1=v1 + pi * dvec[:3], r2=s2.r, v2=s2.v + pi * dvec[3:], dt=dt)
    prob = TransferProblem(bc=bc, prop=prop, formulation="fuel", n_rev=0)
    sol = solve_tpbvp(prob, guess=z, max_attempts=0)
    z = sol.shooting_vector()
print(f"{nsteps} warm fuel steps:", time.time() - t0, "s; final dv =", sol.dv,
      "m/s, resid", sol.residual_norm)

# residual at converged being ~0
res = shoot_fuel(sol.costate0, bc, prop)
print("shoot_fuel at converged:", np.linalg.norm(res))

# time-optimal solves at modest perturbation
bc_t = BoundaryConditions(r1=r1, v1=v1 + 100 * dvec[:3], r2=s2.r, v2=s2.v + 100 * dvec[3:], dt=dt)
t0 = time.time()
prob_t = TransferProblem(bc=bc_t, prop=prop, formulation="time-p2p")
try:
    sol_t = solve_tpbvp(prob_t, rng=rng, tf_scale=0.15 * bc_t.dt / sol0.scales.T0, max_attempts=40)
    print("time-p2p:", time.time() - t0, "s; tf =", sol_t.tf / 86400, "days, mf", sol_t.mass_fraction,
          "resid", sol_t.residual_norm, "revs", sol_t.revolutions)
except Exception as e:
    print("time-p2p failed:", e)

t0 = time.time()
prob_o = TransferProblem(bc=bc_t, prop=prop, formulation="time-orbit")
try:
    sol_o = solve_tpbvp(prob_o, rng=rng, tf_scale=0.1 * bc_t.dt / sol0.scales.T0, max_attempts=40)
    print("time-orbit:", time.time() - t0, "s; tf =", sol_o.tf / 86400, "days, mf", sol_o.mass_fraction,
          "resid", sol_o.residual_norm, "lamL(tf) =", sol_o.trajectory[-1, 12])
except Exception as e:
    print("time-orbit failed:", e)

# Hamiltonian constancy along the fuel arc
from lowthrust.ocp import hamiltonian, AugmentedState, CostateVector
from lowthrust.astro import MeeState
Hs = []
for i in range(0, len(sol.t_grid), 16):
    y = sol.trajectory[i]
    H = K.hamiltonian(y, 1.0, sol.nd.beta, prop.v_exhaust / sol.scales.V0,
                      sol.costate0.lambda_0, 1e-5, 0)
    Hs.append(H)
print("fuel H range:", max(Hs) - min(Hs), "H0:", Hs[0])
