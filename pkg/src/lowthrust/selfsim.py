"""Self-similar preprocessing.

Reduces a transfer problem to its canonical representative: a frame
rotation putting the departure position on +x with the arrival in the
xy-plane, and a nondimensionalization that sets the gravitational
parameter and the departure radius to one.  Also builds every supported
network input configuration from the reduced problem.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels as _k
from .errors import (CollinearBoundaryError, DegenerateStateError,
                     LambertNoConvergenceError, LambertNoSolutionError)
from .problem import BoundaryConditions, PropulsionParams


@dataclass(frozen=True)
class ScaleSet:
    """Reference scales: L0 = |r1|, T0 = sqrt(L0^3/mu), V0 = L0/T0."""

    L0: float
    T0: float
    V0: float
    A0: float
    m0: float
    mu: float

    @classmethod
    def from_problem(cls, bc: BoundaryConditions, prop: PropulsionParams) -> "ScaleSet":
        L0 = float(np.linalg.norm(bc.r1))
        if L0 <= 0.0:
            raise DegenerateStateError("departure radius is zero")
        T0 = math.sqrt(L0**3 / prop.mu)
        return cls(L0=L0, T0=T0, V0=L0 / T0, A0=L0 / T0**2, m0=prop.m0, mu=prop.mu)


@dataclass(frozen=True)
class NondimParams:
    """Dimensionless thrust beta, mass-flow gamma and initial acceleration."""

    beta: float
    gamma: float
    a_s: float  # dimensional T_max/m0, kept for feature construction

    @classmethod
    def from_problem(cls, prop: PropulsionParams, scales: ScaleSet) -> "NondimParams":
        beta = prop.t_max * scales.T0**2 / (prop.m0 * scales.L0)
        gamma = prop.t_max * scales.T0 / (prop.v_exhaust * prop.m0)
        return cls(beta=beta, gamma=gamma, a_s=prop.a_s)


@dataclass(frozen=True)
class RotationFrame:
    """Proper rotation to the canonical transfer pose."""

    matrix: np.ndarray

    def apply(self, bc: BoundaryConditions) -> BoundaryConditions:
        return bc.rotated(self.matrix)

    def check(self, atol: float = 1e-13) -> bool:
        R = self.matrix
        return (np.abs(R @ R.T - np.eye(3)).max() < atol
                and abs(np.linalg.det(R) - 1.0) < 10 * atol)


def rotate_boundary(bc: BoundaryConditions) -> tuple[BoundaryConditions, RotationFrame]:
    """Rotate the boundary pair into the canonical pose.

    r1 maps to the +x axis, r2 into the xy-plane, and the departure
    velocity picks the orientation with a non-negative y projection (ties
    broken by the arrival position/velocity).
    """
    R = np.empty((3, 3))
    st = _k.canonical_rotation(bc.r1, bc.v1, bc.r2, R)
    if st != _k.OK:
        raise CollinearBoundaryError("r1 and r2 are (anti-)parallel")
    frame = RotationFrame(matrix=R)
    return frame.apply(bc), frame


def nondimensionalize(bc: BoundaryConditions, prop: PropulsionParams
                      ) -> tuple[BoundaryConditions, NondimParams, ScaleSet]:
    """Map a problem to scaled units with mu = 1 and |r1| = 1."""
    scales = ScaleSet.from_problem(bc, prop)
    nd = NondimParams.from_problem(prop, scales)
    bc_nd = bc.scaled(1.0 / scales.L0, 1.0 / scales.T0)
    return bc_nd, nd, scales


def redimensionalize(value, kind: str, scales: ScaleSet):
    """Map a dimensionless output back to SI units.

    kind: one of 'dv'/'velocity', 'time', 'length', 'accel', 'mass'.
    """
    factor = {"dv": scales.V0, "velocity": scales.V0, "time": scales.T0,
              "length": scales.L0, "accel": scales.A0, "mass": scales.m0}
    try:
        return value * factor[kind]
    except KeyError:
        raise ValueError(f"unknown kind {kind!r}") from None


# ---------------------------------------------------------------------------
# feature construction
# ---------------------------------------------------------------------------
FEATURE_CONFIGS = ("coe", "mee", "rv", "rv_rotate", "ref_diff",
                   "lambert_cart", "lambert_sph", "t_lambert")

# feature-block column indices (see _kernels.feature_blocks)
_B = {
    "v1r": (0, 1, 2), "r2xy": (3, 4), "v2r": (5, 6, 7),
    "e_lam": 8, "nu_lam": 9,
    "dv1c": (10, 11, 12), "dv2c": (13, 14, 15),
    "dv1s": (16, 17, 18), "dv2s": (19, 20, 21),
    "t_lam": 22, "dt": 23, "a_s": 24, "vex": 25,
    "mee1": tuple(range(26, 32)), "mee2": tuple(range(32, 38)),
    "coe1": tuple(range(38, 44)), "coe2": tuple(range(44, 50)),
    "rdiff": (50, 51, 52), "vdiff": (53, 54, 55),
    "rv_raw": tuple(range(56, 68)),
}

_LAMBERT_CONFIGS = {"ref_diff", "lambert_cart", "lambert_sph", "t_lambert"}


@dataclass(frozen=True)
class FeatureLayout:
    """Frozen ordering of the network inputs; serialized into model files."""

    configs: tuple[str, ...]
    include_dt: bool
    names: tuple[str, ...]
    version: int = 1

    @property
    def dim(self) -> int:
        return len(self.names)

    def needs_lambert(self) -> bool:
        return bool(_LAMBERT_CONFIGS.intersection(self.configs))

    def to_dict(self) -> dict:
        return {"version": self.version, "configs": list(self.configs),
                "include_dt": self.include_dt, "names": list(self.names)}

    @classmethod
    def from_dict(cls, d: dict) -> "FeatureLayout":
        return cls(configs=tuple(d["configs"]), include_dt=bool(d["include_dt"]),
                   names=tuple(d["names"]), version=int(d.get("version", 1)))


def _config_names(config: str) -> list[str]:
    sincos = lambda base: [f"sin_{base}", f"cos_{base}"]
    if config in ("coe",):
        names = []
        for tag in ("1", "2"):
            names += [f"a{tag}", f"e{tag}"]
            for ang in ("i", "raan", "argp", "nu"):
                names += sincos(f"{ang}{tag}")
        return names
    if config == "mee":
        names = []
        for tag in ("1", "2"):
            names += [f"{el}{tag}" for el in ("p", "f", "g", "h", "k")]
            names += sincos(f"L{tag}")
        return names
    if config == "rv":
        return [f"{vec}_{ax}" for vec in ("r1", "v1", "r2", "v2") for ax in "xyz"]
    if config == "rv_rotate":
        return ([f"v1r_{ax}" for ax in "xyz"] + ["r2r_x", "r2r_y"]
                + [f"v2r_{ax}" for ax in "xyz"])
    if config == "ref_diff":
        return ([f"dr_{ax}" for ax in "xyz"] + [f"dvel_{ax}" for ax in "xyz"]
                + [f"dv1_{ax}" for ax in "xyz"] + [f"dv2_{ax}" for ax in "xyz"])
    if config == "lambert_cart":
        return (["e_lam"] + sincos("nu_lam")
                + [f"dv1_{ax}" for ax in "xyz"] + [f"dv2_{ax}" for ax in "xyz"])
    if config == "lambert_sph":
        return (["e_lam"] + sincos("nu_lam")
                + [f"dv1_{c}" for c in ("rad", "tan", "nrm")]
                + [f"dv2_{c}" for c in ("rad", "tan", "nrm")])
    if config == "t_lambert":
        return ["t_lambert"]
    raise ValueError(f"unknown feature config {config!r}")


def feature_layout(configs, include_dt: bool = True) -> FeatureLayout:
    if isinstance(configs, str):
        configs = tuple(c.strip() for c in configs.split("+"))
    configs = tuple(configs)
    names: list[str] = []
    for cfg in configs:
        names += _config_names(cfg)
    if include_dt:
        names.append("dt")
    names += ["a_s", "isp"]
    return FeatureLayout(configs=configs, include_dt=include_dt, names=tuple(names))


def _expand_angles(blocks: np.ndarray, idx) -> list[np.ndarray]:
    """coe/mee blocks carry raw angles; expand them to sine-cosine pairs."""
    return [np.sin(blocks[:, idx]), np.cos(blocks[:, idx])]


def features_from_blocks(blocks: np.ndarray, layout: FeatureLayout) -> np.ndarray:
    """Assemble the feature matrix from raw block rows (vectorized)."""
    cols: list[np.ndarray] = []
    for cfg in layout.configs:
        if cfg == "coe":
            for base in ("coe1", "coe2"):
                i0 = _B[base][0]
                cols += [blocks[:, i0], blocks[:, i0 + 1]]
                for joff in (2, 3, 4, 5):
                    cols += _expand_angles(blocks, i0 + joff)
        elif cfg == "mee":
            for base in ("mee1", "mee2"):
                i0 = _B[base][0]
                cols += [blocks[:, i0 + j] for j in range(5)]
                cols += _expand_angles(blocks, i0 + 5)
        elif cfg == "rv":
            cols += [blocks[:, j] for j in _B["rv_raw"]]
        elif cfg == "rv_rotate":
            cols += [blocks[:, j] for j in _B["v1r"] + _B["r2xy"] + _B["v2r"]]
        elif cfg == "ref_diff":
            cols += [blocks[:, j] for j in _B["rdiff"] + _B["vdiff"]
                     + _B["dv1c"] + _B["dv2c"]]
        elif cfg == "lambert_cart":
            cols.append(blocks[:, _B["e_lam"]])
            cols += _expand_angles(blocks, _B["nu_lam"])
            cols += [blocks[:, j] for j in _B["dv1c"] + _B["dv2c"]]
        elif cfg == "lambert_sph":
            cols.append(blocks[:, _B["e_lam"]])
            cols += _expand_angles(blocks, _B["nu_lam"])
            cols += [blocks[:, j] for j in _B["dv1s"] + _B["dv2s"]]
        elif cfg == "t_lambert":
            cols.append(blocks[:, _B["t_lam"]])
        else:
            raise ValueError(f"unknown feature config {cfg!r}")
    if layout.include_dt:
        cols.append(blocks[:, _B["dt"]])
    cols.append(blocks[:, _B["a_s"]])
    cols.append(blocks[:, _B["vex"]])
    return np.column_stack(cols)


@dataclass(frozen=True)
class FeatureVector:
    layout: FeatureLayout
    values: np.ndarray
    revs: int


def compute_blocks(bc: BoundaryConditions, prop: PropulsionParams, revs: int = 0
                   ) -> np.ndarray:
    """Raw dimensionless feature blocks for one transfer; raises on failure."""
    out = np.empty(_k.NBLOCK)
    st = _k.feature_blocks(bc.r1, bc.v1, bc.r2, bc.v2, bc.dt, prop.mu,
                           prop.a_s, prop.v_exhaust, revs, out)
    if st == _k.NO_SOLUTION:
        raise LambertNoSolutionError("transfer time below the multi-rev minimum")
    if st == _k.DEGENERATE:
        raise CollinearBoundaryError("degenerate transfer geometry")
    if st != _k.OK:
        raise LambertNoConvergenceError("reference transfer iteration failed")
    return out


def build_features(bc: BoundaryConditions, prop: PropulsionParams,
                   configs="lambert_sph", revs: int = 0,
                   include_dt: bool = True) -> FeatureVector:
    """Full preprocessing pipeline for one transfer.

    Rotates and nondimensionalizes the boundary pair, solves the reference
    two-impulse transfer where the configuration requires it, and returns
    the assembled input vector.  Angles are encoded as sine-cosine pairs.
    """
    layout = configs if isinstance(configs, FeatureLayout) else feature_layout(configs, include_dt)
    blocks = compute_blocks(bc, prop, revs)
    values = features_from_blocks(blocks[None, :], layout)[0]
    if not np.all(np.isfinite(values)):
        raise DegenerateStateError("non-finite feature values")
    return FeatureVector(layout=layout, values=values, revs=revs)


def batch_feature_blocks(r1, v1, r2, v2, dt, mu, a_s, vex, revs
                         ) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized block computation; returns (blocks, status) per row."""
    n = len(dt)
    out = np.empty((n, _k.NBLOCK))
    status = np.empty(n, dtype=np.int64)
    _k.feature_blocks_batch(np.ascontiguousarray(r1, dtype=float),
                            np.ascontiguousarray(v1, dtype=float),
                            np.ascontiguousarray(r2, dtype=float),
                            np.ascontiguousarray(v2, dtype=float),
                            np.ascontiguousarray(dt, dtype=float),
                            np.ascontiguousarray(mu, dtype=float),
                            np.ascontiguousarray(a_s, dtype=float),
                            np.ascontiguousarray(vex, dtype=float),
                            np.ascontiguousarray(revs, dtype=np.int64),
                            out, status)
    return out, status
