"""Labeled-transfer dataset factory.

Seeds are drawn from Keplerian orbital neighborhoods (trivially feasible
ballistic transfers), then deformed along random boundary-velocity rays by
warm-started continuation until the solver fails or an early-termination
rule fires.  Each converged step yields one labeled sample; samples are
persisted in a versioned little-endian binary format with a JSON header.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field, replace
from multiprocessing import get_context

import numpy as np
from scipy import optimize

from . import _kernels as _k
from .astro import TWO_PI
from .constants import A0_1AU, AU, MU_SUN, V0_1AU
from .errors import LowThrustError, ModelFormatError, NoConvergenceError
from .ocp import (SmoothingParams, TransferProblem, TpbvpSolution,
                  _ScaledProblem, _cold_guess, prefix_extremal_shift,
                  solve_tpbvp)
from .problem import BoundaryConditions, PropulsionParams
from .selfsim import ScaleSet

FORMULATION_CODES = {"fuel": 0, "time-p2p": 1, "time-orbit": 2, "time-fixed": 3}
FORMULATION_NAMES = {v: k for k, v in FORMULATION_CODES.items()}

MAGIC = b"LTDS"
FORMAT_VERSION = 1

RECORD_DTYPE = np.dtype([
    ("ray", "<u8"), ("step", "<u4"), ("formulation", "<u1"), ("flags", "<u1"),
    ("revs", "<i2"),
    ("r1", "<f8", (3,)), ("v1", "<f8", (3,)),
    ("r2", "<f8", (3,)), ("v2", "<f8", (3,)),
    ("dt", "<f8"),
    ("t_max", "<f8"), ("isp", "<f8"), ("m0", "<f8"), ("mu", "<f8"),
    ("dv", "<f8"), ("m_f", "<f8"), ("t_min", "<f8"),
    ("p", "<f8"), ("residual", "<f8"),
])


@dataclass(frozen=True)
class SamplingRanges:
    """Keplerian-neighborhood sampling bounds (SI unless noted)."""

    a_au: tuple[float, float] = (0.6, 3.0)
    e: tuple[float, float] = (0.0, 0.7)
    i: tuple[float, float] = (0.0, 0.97 * math.pi)
    dt_rev: tuple[float, float] = (0.10, 0.95)   # transfer time in orbit periods
    m0: tuple[float, float] = (300.0, 3000.0)
    isp_1au: tuple[float, float] = (700.0, 9000.0)
    a_s_1au: tuple[float, float] = (2.5e-6, 1.2e-2)  # log-uniform, m/s^2 at 1 AU
    mu: float = MU_SUN

    def __post_init__(self):
        for name in ("a_au", "e", "i", "dt_rev", "m0", "isp_1au", "a_s_1au"):
            lo, hi = getattr(self, name)
            if not lo <= hi:
                raise ValueError(f"{name}: min must not exceed max")
        if not 0.0 <= self.e[0] <= self.e[1] < 1.0:
            raise ValueError("eccentricity range must lie in [0, 1)")


@dataclass(frozen=True)
class RayConfig:
    """Continuation-ray stepping parameters (velocity units of V0)."""

    p_start: float = 1e-3
    dp_initial: float = 1e-3
    dp_growth: float = 1.2
    dp_max: float = 1e-2
    dp_min: float = 1e-5
    max_steps: int = 90
    max_samples: int = 32
    mass_floor: float = 0.35    # stop a ray when m_f/m0 drops below this
    cold_effort: float = 0.25   # throttle level targeted by the cold start
    p_init_cap: float = 0.08
    cold_attempts: int = 6

    def __post_init__(self):
        if not self.p_start > 0:
            raise ValueError("p_start must be positive")


@dataclass
class TransferSample:
    """One labeled dataset row (raw dimensional inputs plus label)."""

    ray: int
    step: int
    formulation: str
    revs: int
    bc: BoundaryConditions
    prop: PropulsionParams
    dv: float       # m/s  (NaN for time-optimal rows)
    m_f: float      # kg
    t_min: float    # s    (NaN for fuel rows)
    p: float        # homotopy parameter, m/s
    residual: float

    def to_record(self) -> np.void:
        rec = np.zeros((), dtype=RECORD_DTYPE)
        rec["ray"] = self.ray
        rec["step"] = self.step
        rec["formulation"] = FORMULATION_CODES[self.formulation]
        rec["revs"] = self.revs
        rec["r1"], rec["v1"] = self.bc.r1, self.bc.v1
        rec["r2"], rec["v2"] = self.bc.r2, self.bc.v2
        rec["dt"] = self.bc.dt
        rec["t_max"] = self.prop.t_max
        rec["isp"] = self.prop.isp
        rec["m0"] = self.prop.m0
        rec["mu"] = self.prop.mu
        rec["dv"] = self.dv
        rec["m_f"] = self.m_f
        rec["t_min"] = self.t_min
        rec["p"] = self.p
        rec["residual"] = self.residual
        return rec

    @classmethod
    def from_record(cls, rec) -> "TransferSample":
        bc = BoundaryConditions(r1=np.array(rec["r1"]), v1=np.array(rec["v1"]),
                                r2=np.array(rec["r2"]), v2=np.array(rec["v2"]),
                                dt=float(rec["dt"]))
        prop = PropulsionParams(t_max=float(rec["t_max"]), isp=float(rec["isp"]),
                                m0=float(rec["m0"]), mu=float(rec["mu"]))
        return cls(ray=int(rec["ray"]), step=int(rec["step"]),
                   formulation=FORMULATION_NAMES[int(rec["formulation"])],
                   revs=int(rec["revs"]), bc=bc, prop=prop,
                   dv=float(rec["dv"]), m_f=float(rec["m_f"]),
                   t_min=float(rec["t_min"]), p=float(rec["p"]),
                   residual=float(rec["residual"]))


# ---------------------------------------------------------------------------
# Keplerian-neighborhood seeding
# ---------------------------------------------------------------------------
def sample_keplerian_seed(ranges: SamplingRanges, rng: np.random.Generator
                          ) -> tuple[BoundaryConditions, PropulsionParams, int]:
    """Draw a ballistic transfer and its propulsion parameters.

    The arrival state is the departure state propagated by the transfer
    time, so an unperturbed seed is a zero-cost rendezvous.  Propulsion is
    sampled in 1 AU-equivalent terms (the scaled thrust ratio and exhaust
    velocity match the quoted ranges independently of the seed's size).
    Returns (bc, prop, whole_revolutions).
    """
    mu = ranges.mu
    a = rng.uniform(*ranges.a_au) * AU
    e = rng.uniform(*ranges.e)
    inc = rng.uniform(*ranges.i)
    raan, argp, nu = rng.uniform(0.0, TWO_PI, 3)
    x = np.array([a * (1.0 - e * e),
                  e * math.cos(argp + raan), e * math.sin(argp + raan),
                  math.tan(inc / 2.0) * math.cos(raan),
                  math.tan(inc / 2.0) * math.sin(raan),
                  (argp + raan + nu) % TWO_PI])
    r1 = np.empty(3)
    v1 = np.empty(3)
    _k.mee_to_cart(x, mu, r1, v1)
    period = TWO_PI * math.sqrt(a**3 / mu)
    frac = rng.uniform(*ranges.dt_rev)
    dt = frac * period
    r2 = np.empty(3)
    v2 = np.empty(3)
    if _k.kepler_universal(r1, v1, dt, mu, r2, v2) != _k.OK:
        raise NoConvergenceError("seed propagation failed")
    m0 = rng.uniform(*ranges.m0)
    # scale-equivalent propulsion: quoted at 1 AU, mapped to the seed radius
    L0 = float(np.linalg.norm(r1))
    v0_loc = math.sqrt(mu / L0)
    a0_loc = mu / L0**2
    lo, hi = ranges.a_s_1au
    a_s = math.exp(rng.uniform(math.log(lo), math.log(hi))) * (a0_loc / A0_1AU)
    isp = rng.uniform(*ranges.isp_1au) * (v0_loc / V0_1AU)
    prop = PropulsionParams(t_max=a_s * m0, isp=isp, m0=m0, mu=mu)
    bc = BoundaryConditions(r1=r1, v1=v1, r2=r2, v2=v2, dt=dt)
    return bc, prop, int(frac)


def boundary_eccentricities(bc: BoundaryConditions, mu: float) -> tuple[float, float]:
    """Osculating eccentricities of the departure and arrival states."""
    out = np.empty(2)
    for idx, (r, v) in enumerate(((bc.r1, bc.v1), (bc.r2, bc.v2))):
        rn = np.linalg.norm(r)
        h = np.cross(r, v)
        evec = np.cross(v, h) / mu - r / rn
        out[idx] = np.linalg.norm(evec)
    return float(out[0]), float(out[1])


def early_termination_check(sol: TpbvpSolution, formulation: str) -> str | None:
    """Time-optimal continuation stop rule.

    Returns None to continue, or 'mass' / 'hyperbolic' when the remaining
    mass fraction drops below 0.4 or a boundary orbit leaves the elliptic
    regime.
    """
    if not formulation.startswith("time"):
        return None
    if sol.mass_fraction < 0.4:
        return "mass"
    e1, e2 = boundary_eccentricities(sol.problem.bc, sol.problem.prop.mu)
    if e1 >= 1.0 or e2 >= 1.0:
        return "hyperbolic"
    return None


# ---------------------------------------------------------------------------
# homotopy rays
# ---------------------------------------------------------------------------
@dataclass
class RayStep:
    p: float
    solution: TpbvpSolution
    jac_det: float = math.nan


def _perturbed(bc: BoundaryConditions, direction: np.ndarray, p: float
               ) -> BoundaryConditions:
    return replace(bc, v1=bc.v1 + p * direction[:3], v2=bc.v2 + p * direction[3:])


def _signed_logdet(sp: _ScaledProblem, z: np.ndarray) -> float:
    """sign(det J) * log10(1 + |det J|) of the shooting Jacobian."""
    J = sp.jacobian(z)
    sign, logabs = np.linalg.slogdet(J)
    return float(sign * math.log10(1.0 + math.exp(min(logabs, 300.0))))


def run_homotopy_ray(bc: BoundaryConditions, prop: PropulsionParams,
                     direction: np.ndarray, formulation: str = "fuel",
                     n_rev: int = 0, config: RayConfig = RayConfig(),
                     rng=None, record_jac_det: bool = False,
                     collect_iterations: list | None = None,
                     rtol: float = 1e-9, atol: float = 1e-11
                     ) -> list[RayStep]:
    """Deform a seed transfer along a unit boundary-velocity direction.

    The ray cold-starts at a perturbation sized for a responsive throttle,
    walks down to the base perturbation with an adaptive ratio, then
    sweeps upward with a geometrically growing step that halves on
    failure, until the step underflows, the step budget is spent, or
    (time-optimal) an early termination rule fires.  Warm steps run chord
    iterations on a cached Jacobian factorization, refreshed only when
    contraction is lost.  Steps are returned sorted by p.
    """
    from scipy.linalg import lu_factor

    from .ocp import _chord_step, _newton_warm, _package_solution

    rng = np.random.default_rng(rng) if not isinstance(rng, np.random.Generator) else rng
    direction = np.asarray(direction, dtype=float)
    nrm = np.linalg.norm(direction)
    if not np.isfinite(nrm) or nrm == 0.0:
        raise ValueError("ray direction must be a nonzero 6-vector")
    direction = direction / nrm
    scales = ScaleSet.from_problem(bc, prop)
    V0 = scales.V0

    def problem_at(p: float) -> TransferProblem:
        return TransferProblem(bc=_perturbed(bc, direction, p), prop=prop,
                               formulation=formulation, n_rev=n_rev)

    sp0 = _ScaledProblem(problem_at(config.p_start * V0))
    # very low-thrust seeds cannot absorb the nominal base perturbation;
    # scale it to a fraction of the deliverable effort
    capability = sp0.beta * sp0.dtn
    p_start = min(config.p_start, 0.1 * capability) * V0
    p_init = max(p_start / V0,
                 min(config.cold_effort * capability, config.p_init_cap)) * V0
    try:
        sol = solve_tpbvp(problem_at(p_init), rng=rng,
                          max_attempts=config.cold_attempts,
                          rtol=rtol, atol=atol, n_samples=65)
    except LowThrustError:
        return []
    steps: list[RayStep] = [RayStep(p=p_init, solution=sol)]
    if collect_iterations is not None:
        collect_iterations.append(("cold", sol.nfev))

    state = {"lu": None}

    def advance(p_new: float, z: np.ndarray):
        """One warm continuation step; returns (solution, z_new) or None."""
        sp = _ScaledProblem(problem_at(p_new), rtol=rtol, atol=atol)
        z_new = None
        if state["lu"] is not None:
            z_new = _chord_step(sp, z, state["lu"], 1e-8)
        if z_new is None:
            # one retry with a freshly factored Jacobian before full Newton
            try:
                state["lu"] = lu_factor(sp.jacobian(z))
                z_new = _chord_step(sp, z, state["lu"], 1e-8)
            except Exception:
                state["lu"] = None
        if z_new is None:
            z_new, lu = _newton_warm(sp, z, 1e-8, return_jac=True)
            if z_new is None:
                from .ocp import _hybr_polish
                z_new = _hybr_polish(sp, z, 1e-8, lm_fallback=True, maxfev=600,
                                     restarts=2)
                lu = None
                if z_new is None:
                    return None
            if lu is not None:
                state["lu"] = lu
            else:
                try:
                    state["lu"] = lu_factor(sp.jacobian(z_new))
                except Exception:
                    state["lu"] = None
        if z_new[7] <= 1e-12:
            return None
        s = _package_solution(sp.problem, sp, z_new, 2)
        if collect_iterations is not None:
            collect_iterations.append(("warm", sp.nfev))
        return s, z_new

    # walk down to p_start with an adaptive geometric ratio
    z = sol.shooting_vector()
    p = p_init
    ratio = 0.62
    while p > p_start * 1.0001:
        pn = max(p * ratio, p_start)
        out = advance(pn, z)
        if out is None:
            ratio = math.sqrt(ratio)
            if ratio > 0.98:
                break
            continue
        s, z = out
        steps.append(RayStep(p=pn, solution=s))
        p = pn
        ratio = max(ratio * 0.85, 0.62)

    # upward sweep with growing step, halved on failure
    state["lu"] = None
    z = sol.shooting_vector()
    p = p_init
    dp = config.dp_initial * V0
    n_up = 0
    while n_up < config.max_steps and dp >= config.dp_min * V0:
        pn = p + dp
        out = advance(pn, z)
        if out is None:
            dp *= 0.5
            continue
        s, z = out
        steps.append(RayStep(p=pn, solution=s))
        p = pn
        dp = min(dp * config.dp_growth, config.dp_max * V0)
        n_up += 1
        if early_termination_check(s, formulation) is not None:
            break
        if s.mass_fraction < config.mass_floor:
            break
    steps.sort(key=lambda st: st.p)
    if record_jac_det:
        for st in steps:
            spj = _ScaledProblem(problem_at(st.p))
            st.jac_det = _signed_logdet(spj, st.solution.shooting_vector())
    return steps


def select_ray_samples(steps: list[RayStep], max_samples: int) -> list[RayStep]:
    """Thin a ray to at most max_samples steps, always keeping the last
    (boundary) one, to stop single rays from dominating the dataset."""
    if len(steps) <= max_samples:
        return steps
    idx = np.linspace(0, len(steps) - 1, max_samples).round().astype(int)
    idx[-1] = len(steps) - 1
    return [steps[i] for i in sorted(set(idx.tolist()))]


# ---------------------------------------------------------------------------
# zero-cost (exactly Keplerian) solves
# ---------------------------------------------------------------------------
def solve_zero_cost(bc: BoundaryConditions, prop: PropulsionParams,
                    rng=None, tol: float = 1e-8, attempts: int = 8
                    ) -> TpbvpSolution:
    """Solve the fuel-optimal problem of an unperturbed Keplerian seed.

    The extremal sits at the throttle-smoothing floor, which is badly
    conditioned at the working smoothing strength; a smoothing ladder
    solved entirely at p = 0 tracks it down reliably.  Spurious engine-off
    branches with a vanishing cost multiplier are rejected.
    """
    rng = np.random.default_rng(rng) if not isinstance(rng, np.random.Generator) else rng
    problem = TransferProblem(bc=bc, prop=prop, formulation="fuel")
    sp = _ScaledProblem(problem)
    eps_target = sp.eps
    from .ocp import _package_solution  # local import to avoid cycle at module load
    for _ in range(attempts):
        z = _cold_guess(rng, sp, sp.dtn, primer=False)
        e = 0.3
        try:
            while True:
                sp.eps = e
                sol = optimize.root(sp.residual, z, jac=sp.jacobian, method="hybr",
                                    options={"xtol": 1e-13, "maxfev": 2000})
                good = (np.isfinite(sol.fun).all()
                        and np.linalg.norm(sol.fun) < np.linalg.norm(sp.residual(z))
                        and sol.x[7] > 1e-9)
                if good:
                    z = sol.x
                if e <= eps_target:
                    break
                e = max(e * 0.55, eps_target)
            sp.eps = eps_target
            rnorm = float(np.linalg.norm(sp.residual(z)))
            if rnorm > tol:
                res = optimize.least_squares(sp.residual, z, jac=sp.jacobian,
                                             method="lm", xtol=1e-15, ftol=1e-15,
                                             gtol=1e-15, max_nfev=400)
                if float(np.linalg.norm(res.fun)) < rnorm and res.x[7] > 1e-9:
                    z = res.x
                    rnorm = float(np.linalg.norm(res.fun))
            if rnorm < tol and z[7] > 1e-12:
                return _package_solution(problem, sp, z, 65)
        finally:
            sp.eps = eps_target
    raise NoConvergenceError("zero-cost seed solve did not converge")


# ---------------------------------------------------------------------------
# prefix-truncation augmentation
# ---------------------------------------------------------------------------
def prefix_augment(sol: TpbvpSolution, n_cuts: int, ray: int = 0,
                   step0: int = 0) -> list[TransferSample]:
    """Expand a converged time-optimal solution into fixed-endpoint samples.

    Truncation times are uniformly spaced in (t0, tf]; each prefix keeps
    the state/costate pair, shifts the mass costate to restore its
    terminal condition, and is labeled with its own minimum time.
    """
    if not sol.formulation.startswith("time"):
        raise ValueError("prefix augmentation applies to time-optimal solutions")
    out: list[TransferSample] = []
    scales = sol.scales
    for i in range(1, n_cuts + 1):
        tau = sol.tf * i / n_cuts
        pre = prefix_extremal_shift(sol, tau)
        xt = pre.trajectory[-1, :6].copy()
        xt_wrapped = xt.copy()
        xt_wrapped[5] = xt[5] % TWO_PI
        r2 = np.empty(3)
        v2 = np.empty(3)
        _k.mee_to_cart(xt_wrapped, 1.0, r2, v2)
        bc = BoundaryConditions(r1=sol.problem.bc.r1, v1=sol.problem.bc.v1,
                                r2=r2 * scales.L0, v2=v2 * scales.V0, dt=tau)
        out.append(TransferSample(
            ray=ray, step=step0 + i, formulation="time-fixed",
            revs=pre.revolutions, bc=bc, prop=sol.problem.prop,
            dv=math.nan, m_f=pre.m_f, t_min=tau, p=math.nan,
            residual=pre.residual_norm))
    return out


# ---------------------------------------------------------------------------
# dataset assembly and persistence
# ---------------------------------------------------------------------------
def _steps_to_samples(ray_idx: int, steps: list[RayStep], formulation: str
                      ) -> list[TransferSample]:
    out = []
    for i, st in enumerate(steps):
        s = st.solution
        is_fuel = formulation == "fuel"
        out.append(TransferSample(
            ray=ray_idx, step=i, formulation=formulation,
            revs=s.revolutions, bc=s.problem.bc, prop=s.problem.prop,
            dv=s.dv if is_fuel else math.nan,
            m_f=s.m_f,
            t_min=math.nan if is_fuel else s.tf,
            p=st.p, residual=s.residual_norm))
    return out


def _ray_task(args) -> list[TransferSample]:
    (master_seed, ray_idx, ranges, config, formulation, n_rev_choices,
     prefix_cuts) = args
    rng = np.random.default_rng([master_seed, ray_idx])
    try:
        bc, prop, _ = sample_keplerian_seed(ranges, rng)
        n_rev = int(rng.choice(n_rev_choices)) if formulation == "fuel" else 0
        if formulation == "fuel" and n_rev > 0:
            # winding target needs a transfer spanning that many periods
            period_frac = n_rev + rng.uniform(0.05, 0.95)
            mu = prop.mu
            sma = 1.0 / (2.0 / np.linalg.norm(bc.r1)
                         - np.linalg.norm(bc.v1)**2 / mu)
            dt = period_frac * TWO_PI * math.sqrt(sma**3 / mu)
            r2 = np.empty(3)
            v2 = np.empty(3)
            _k.kepler_universal(bc.r1, bc.v1, dt, mu, r2, v2)
            bc = replace(bc, r2=r2, v2=v2, dt=dt)
        direction = rng.normal(size=6)
        direction /= np.linalg.norm(direction)
        steps = run_homotopy_ray(bc, prop, direction, formulation=formulation,
                                 n_rev=n_rev, config=config, rng=rng)
        steps = select_ray_samples(steps, config.max_samples)
        samples = _steps_to_samples(ray_idx, steps, formulation)
        if formulation == "time-orbit" and prefix_cuts > 0 and steps:
            # augment a mid-ray parent (clear of both the degenerate seed
            # and the termination boundary)
            parent = steps[len(steps) // 2].solution
            samples += prefix_augment(parent, prefix_cuts, ray=ray_idx,
                                      step0=1000)
        return samples
    except LowThrustError:
        return []


def generate_dataset(ranges: SamplingRanges, config: RayConfig,
                     formulation: str, target_count: int, master_seed: int,
                     out_path=None, workers: int = 1,
                     n_rev_choices=(0,), prefix_cuts: int = 0,
                     rev_quota: bool = False, max_rays: int | None = None
                     ) -> tuple[dict, np.ndarray]:
    """Generate a labeled dataset of at least `target_count` samples.

    Rays are independent work units seeded by (master_seed, ray index);
    output is assembled in ray order, so the result is byte-deterministic
    for a given configuration regardless of worker count.
    """
    if formulation not in ("fuel", "time-p2p", "time-orbit"):
        raise ValueError(f"cannot generate datasets for {formulation!r}")
    if max_rays is None:
        max_rays = max(64, int(6 * target_count / max(config.max_samples, 1)))
    tasks = ((master_seed, idx, ranges, config, formulation,
              tuple(n_rev_choices), prefix_cuts) for idx in range(max_rays))
    quota = None
    if rev_quota and formulation == "fuel" and len(n_rev_choices) > 1:
        quota = {n: int(math.ceil(target_count / len(n_rev_choices)))
                 for n in n_rev_choices}
    collected: list[TransferSample] = []
    counts: dict[int, int] = {}

    def consume(samples: list[TransferSample]) -> bool:
        if samples and quota is not None:
            # balance revolution counts by whole-ray rejection
            n_rev = max(0, min(samples[0].revs, max(n_rev_choices)))
            if n_rev in quota:
                if counts.get(n_rev, 0) >= quota[n_rev]:
                    return len(collected) >= target_count
                counts[n_rev] = counts.get(n_rev, 0) + len(samples)
        collected.extend(samples)
        return len(collected) >= target_count

    if workers <= 1:
        for task in tasks:
            if consume(_ray_task(task)):
                break
    else:
        ctx = get_context("spawn")
        with ctx.Pool(workers) as pool:
            for samples in pool.imap(_ray_task, tasks, chunksize=1):
                if consume(samples):
                    break
    collected = collected[:target_count]
    records = np.empty(len(collected), dtype=RECORD_DTYPE)
    for i, s in enumerate(collected):
        records[i] = s.to_record()
    header = {
        "format_version": FORMAT_VERSION,
        "formulation": formulation,
        "count": len(records),
        "master_seed": int(master_seed),
        "ranges": asdict(ranges),
        "ray_config": asdict(config),
        "n_rev_choices": list(n_rev_choices),
        "prefix_cuts": prefix_cuts,
        "sha256": hashlib.sha256(records.tobytes()).hexdigest(),
    }
    if out_path is not None:
        write_dataset(out_path, header, records)
    return header, records


def write_dataset(path, header: dict, records: np.ndarray) -> None:
    header = dict(header)
    header["count"] = int(len(records))
    header["sha256"] = hashlib.sha256(records.tobytes()).hexdigest()
    blob = json.dumps(header, sort_keys=True).encode()
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(np.uint32(FORMAT_VERSION).tobytes())
        fh.write(np.uint64(len(blob)).tobytes())
        fh.write(blob)
        fh.write(records.tobytes())


def load_dataset(path) -> tuple[dict, np.ndarray]:
    with open(path, "rb") as fh:
        if fh.read(4) != MAGIC:
            raise ModelFormatError("not a transfer dataset file")
        version = int(np.frombuffer(fh.read(4), dtype="<u4")[0])
        if version != FORMAT_VERSION:
            raise ModelFormatError(f"unsupported dataset version {version}")
        hlen = int(np.frombuffer(fh.read(8), dtype="<u8")[0])
        header = json.loads(fh.read(hlen).decode())
        payload = fh.read()
    records = np.frombuffer(payload, dtype=RECORD_DTYPE)
    if len(records) != header["count"]:
        raise ModelFormatError("record count does not match header")
    if hashlib.sha256(payload).hexdigest() != header["sha256"]:
        raise ModelFormatError("dataset checksum mismatch")
    return header, records


CSV_COLUMNS = ["ray", "step", "formulation", "revs",
               "r1x", "r1y", "r1z", "v1x", "v1y", "v1z",
               "r2x", "r2y", "r2z", "v2x", "v2y", "v2z",
               "dt", "t_max", "isp", "m0", "mu", "dv", "m_f", "t_min",
               "p", "residual"]


def export_csv(path, records: np.ndarray) -> None:
    with open(path, "w") as fh:
        fh.write(",".join(CSV_COLUMNS) + "\n")
        for rec in records:
            row = [str(int(rec["ray"])), str(int(rec["step"])),
                   FORMULATION_NAMES[int(rec["formulation"])],
                   str(int(rec["revs"]))]
            for vec in ("r1", "v1", "r2", "v2"):
                row += [repr(float(x)) for x in rec[vec]]
            for name in ("dt", "t_max", "isp", "m0", "mu", "dv", "m_f",
                         "t_min", "p", "residual"):
                row.append(repr(float(rec[name])))
            fh.write(",".join(row) + "\n")


def audit_samples(records: np.ndarray, fraction: float, master_seed: int,
                  rel_tol: float = 1e-6, max_attempts: int = 30
                  ) -> tuple[int, int, float]:
    """Re-solve a random subsample from cold and compare labels.

    Returns (checked, matched, worst relative error).
    """
    rng = np.random.default_rng([master_seed, 0xA0D17])
    n = len(records)
    n_check = max(1, int(round(fraction * n)))
    idx = rng.choice(n, size=min(n_check, n), replace=False)
    checked = matched = 0
    worst = 0.0
    for i in idx:
        s = TransferSample.from_record(records[i])
        problem = TransferProblem(bc=s.bc, prop=s.prop,
                                  formulation=s.formulation,
                                  n_rev=max(s.revs, 0))
        try:
            sol = solve_tpbvp(problem, rng=rng, max_attempts=max_attempts)
        except LowThrustError:
            checked += 1
            continue
        checked += 1
        if s.formulation == "fuel":
            ref, got = s.dv, sol.dv
            scale = max(abs(ref), 1e-3 * sol.scales.V0)
        else:
            ref, got = s.t_min, sol.tf
            scale = max(abs(ref), 1e-6 * sol.scales.T0)
        err = abs(got - ref) / scale
        worst = max(worst, err)
        if err < rel_tol:
            matched += 1
    return checked, matched, worst
