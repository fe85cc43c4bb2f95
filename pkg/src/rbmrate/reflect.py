"""Grid simulation of orthant-reflected Brownian motion and its couplings.

All reflection happens on the time grid: each Euler step draws an exact
Gaussian increment for the free motion and then projects back to the
orthant through the reflection matrix by solving the one-step
complementarity problem

    x_new = y_free + R dl >= 0,   dl >= 0,   x_new . dl = 0,

whose least solution is the limit of dl <- max(0, P^T dl - y_free).  A
coordinate touches zero on a step exactly when its dl entry is positive;
no sub-grid boundary detection is attempted.
"""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import _rng
from .model import DerivedModel

__all__ = [
    "SimConfig",
    "Trajectory",
    "CoupledRun",
    "skorokhod_step",
    "simulate_rbm",
    "simulate_normal_rbm",
    "simulate_coupled",
    "save_trajectory",
    "load_trajectory",
    "trajectory_csv",
]

SCHEMA_TRAJECTORY = "rbmrate/trajectory/v1"


@dataclass(frozen=True)
class SimConfig:
    dt: float
    horizon: float
    n_paths: int = 1
    seed: int = 0
    lcp_tol: float = 1e-12
    lcp_max_iter: int | None = None  # defaults to 10 d + 1000 at solve time

    def __post_init__(self):
        if self.dt <= 0.0 or self.horizon <= 0.0:
            raise ValueError("dt and horizon must be positive")
        if self.horizon / self.dt > 1e9:
            raise ValueError("horizon/dt exceeds 1e9 grid steps")
        if self.n_paths < 1:
            raise ValueError("n_paths must be >= 1")
        if self.lcp_tol <= 0.0:
            raise ValueError("lcp_tol must be positive")

    @property
    def n_steps(self) -> int:
        return int(round(self.horizon / self.dt))


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray   # (n+1,)
    states: np.ndarray  # (n+1, d)
    dl: np.ndarray      # (n, d) pushing increments over (t_{k-1}, t_k]
    path_index: int
    seed: int

    @property
    def d(self) -> int:
        return self.states.shape[1]


@dataclass(frozen=True)
class CoupledRun:
    traj_x: Trajectory
    traj_y: Trajectory
    traj_plus: Trajectory | None
    provenance: dict = field(default_factory=dict)


def _pattern_solve(z: np.ndarray, p: np.ndarray, max_rounds: int):
    """Exact one-step solution by pivoting on the pushing pattern.

    Rows sharing a candidate support alpha get dl_alpha from the linear
    system (I - P^T_aa) dl_alpha = -z_alpha; the pattern is re-read off the
    complementarity residual until it is a fixed point (unique since
    I - P^T is a nonsingular M-matrix).  Returns (x, dl) or None if the
    pattern cycles within max_rounds.
    """
    d = z.shape[1]
    pattern = z < 0.0
    lam = np.zeros_like(z)
    pt = p.T
    for _ in range(max_rounds):
        lam.fill(0.0)
        # batch the per-row systems by support size: rows with k active
        # constraints share the shape (k, k), so one stacked solve covers
        # them all even though the supports themselves differ
        sizes = pattern.sum(axis=1)
        for k in np.unique(sizes):
            if k == 0:
                continue
            rows = np.flatnonzero(sizes == k)
            # stable argsort floats active indices to the front, in order
            alphas = np.argsort(~pattern[rows], axis=1, kind="stable")[:, :k]
            a = np.eye(k) - pt[alphas[:, :, None], alphas[:, None, :]]
            sol = np.linalg.solve(a, -z[rows[:, None], alphas][:, :, None])
            lam[rows[:, None], alphas] = sol[:, :, 0]
        y = lam @ p - z
        new_pattern = y > 0.0
        if np.array_equal(new_pattern, pattern):
            return np.maximum(-y, 0.0), np.maximum(y, 0.0)
        pattern = new_pattern
    return None


def skorokhod_step(y_free, p_mat, tol: float = 1e-12,
                   max_iter: int | None = None):
    """One-step orthant projection through R = I - P^T: the least solution of

        x = y_free + R dl >= 0,   dl >= 0,   x . dl = 0.

    y_free may be a single d-vector or a batch (m, d); returns (x, dl) of
    the same shape.  Solved by support pivoting with a monotone fixed-point
    fallback (dl <- max(0, P^T dl - y_free)); outputs are rebuilt from the
    complementarity residual as positive/negative parts, so x >= 0 and
    x . dl = 0 hold exactly and the defect x - y_free - R dl stays within
    tol * max(1, ||y_free||_inf).
    """
    z = np.asarray(y_free, dtype=float)
    single = z.ndim == 1
    if single:
        z = z[None, :]
    d = z.shape[1]
    p = np.asarray(p_mat, dtype=float)
    if p.shape != (d, d):
        raise ValueError(f"p_mat must have shape ({d}, {d}), got {p.shape}")
    if max_iter is None:
        max_iter = 10 * d + 1000

    if not p.any():
        # independent coordinates: plain componentwise reflection
        x = np.maximum(z, 0.0)
        dl = x - z
        return (x[0], dl[0]) if single else (x, dl)

    # rows with y_free >= 0 need no pushing; solve only the rest
    bdry = np.flatnonzero((z < 0.0).any(axis=1))
    x = np.maximum(z, 0.0)
    dl = np.zeros_like(z)
    if bdry.size:
        zb = z[bdry]
        solved = _pattern_solve(zb, p, max_rounds=2 * d + 10)
        if solved is None:
            solved = _fixed_point_solve(zb, p, tol, max_iter)
        x[bdry], dl[bdry] = solved
    if single:
        return x[0], dl[0]
    return x, dl


def _fixed_point_solve(z: np.ndarray, p: np.ndarray, tol: float, max_iter: int):
    npt = max(1.0, float(np.abs(p).sum(axis=0).max()))  # ||P^T||_inf
    tol_stop = tol * max(1.0, float(np.max(np.abs(z)))) / (npt * npt)
    lam = np.zeros_like(z)
    diff = math.inf
    for _ in range(max_iter):
        nxt = lam @ p - z
        np.maximum(nxt, 0.0, out=nxt)
        diff = float(np.max(np.abs(nxt - lam)))
        lam = nxt
        if diff <= tol_stop:
            break
    else:
        raise RuntimeError(
            f"one-step projection failed to converge in {max_iter} iterations "
            f"(last update {diff:.3g}); is P transient?")
    y = lam @ p - z
    return np.maximum(-y, 0.0), np.maximum(y, 0.0)


def _steps_oblique(dm: DerivedModel, states: np.ndarray, incs: np.ndarray,
                   dt: float, tol: float, max_iter: int | None):
    """Advance a batch one step: states (m, d), incs (m, d) standard normals."""
    drift = dm.params.mu * dt
    y_free = states + incs @ (np.sqrt(dt) * dm.params.diff.T) + drift
    return skorokhod_step(y_free, dm.p_mat, tol=tol, max_iter=max_iter)


def simulate_rbm(dm: DerivedModel, x0, cfg: SimConfig) -> list[Trajectory]:
    """Euler-grid paths of the reflected process from x0, one Trajectory per
    path, each driven by its own (seed, path_index) substream."""
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (dm.d,):
        raise ValueError(f"x0 must have shape ({dm.d},)")
    if np.any(x0 < 0.0):
        raise ValueError("x0 must lie in the nonnegative orthant")
    n = cfg.n_steps
    times = np.arange(n + 1) * cfg.dt
    incs = _rng.chunk_normals(cfg.seed, range(cfg.n_paths), n, dm.d)
    gauss = incs @ (np.sqrt(cfg.dt) * dm.params.diff.T) + dm.params.mu * cfg.dt
    out = []
    states = np.empty((cfg.n_paths, n + 1, dm.d))
    dls = np.empty((cfg.n_paths, n, dm.d))
    states[:, 0, :] = x0
    cur = np.broadcast_to(x0, (cfg.n_paths, dm.d)).copy()
    for k in range(n):
        cur, dl = skorokhod_step(cur + gauss[:, k, :], dm.p_mat,
                                 tol=cfg.lcp_tol, max_iter=cfg.lcp_max_iter)
        states[:, k + 1, :] = cur
        dls[:, k, :] = dl
    for j in range(cfg.n_paths):
        out.append(Trajectory(times=times, states=states[j], dl=dls[j],
                              path_index=j, seed=cfg.seed))
    return out


def simulate_normal_rbm(dm: DerivedModel, x0, v, cfg: SimConfig) -> list[Trajectory]:
    """Normally reflected comparison process with constant drift -v:
    componentwise running reflection x <- max(0, x + D dW - v dt).

    Dominates the obliquely reflected process (through R^{-1}) whenever
    R^{-1} v <= b; a violation only warns, since the path itself is still
    well defined."""
    x0 = np.asarray(x0, dtype=float)
    v = np.asarray(v, dtype=float)
    if x0.shape != (dm.d,) or v.shape != (dm.d,):
        raise ValueError("x0 and v must be d-vectors")
    slack = float(np.min(dm.b - dm.r_inv @ v))
    if slack < -1e-9:
        warnings.warn(f"R^-1 v exceeds b (slack {slack:.3g}); "
                      "domination of the reflected process is not guaranteed",
                      stacklevel=2)
    n = cfg.n_steps
    times = np.arange(n + 1) * cfg.dt
    incs = _rng.chunk_normals(cfg.seed, range(cfg.n_paths), n, dm.d)
    gauss = incs @ (np.sqrt(cfg.dt) * dm.params.diff.T) - v * cfg.dt
    out = []
    for j in range(cfg.n_paths):
        states = np.empty((n + 1, dm.d))
        dls = np.empty((n, dm.d))
        states[0] = x0
        cur = x0.copy()
        for k in range(n):
            y_free = cur + gauss[j, k, :]
            cur = np.maximum(y_free, 0.0)
            dls[k] = cur - y_free
            states[k + 1] = cur
        out.append(Trajectory(times=times, states=states, dl=dls,
                              path_index=j, seed=cfg.seed))
    return out


def simulate_coupled(dm: DerivedModel, x0, y0, cfg: SimConfig,
                     v=None) -> list[CoupledRun]:
    """Synchronous coupling: the reflected process from x0 and from y0, and
    optionally the normally reflected comparison process from x0 with drift
    -v, all driven by the same Gaussian increments per path."""
    x0 = np.asarray(x0, dtype=float)
    y0 = np.asarray(y0, dtype=float)
    if x0.shape != (dm.d,) or y0.shape != (dm.d,):
        raise ValueError("x0 and y0 must be d-vectors")
    if np.any(x0 < 0.0) or np.any(y0 < 0.0):
        raise ValueError("starts must lie in the nonnegative orthant")
    vv = None
    if v is not None:
        vv = np.asarray(v, dtype=float)
        slack = float(np.min(dm.b - dm.r_inv @ vv))
        if slack < -1e-9:
            warnings.warn(f"R^-1 v exceeds b (slack {slack:.3g}); "
                          "domination is not guaranteed", stacklevel=2)
    n = cfg.n_steps
    times = np.arange(n + 1) * cfg.dt
    incs = _rng.chunk_normals(cfg.seed, range(cfg.n_paths), n, dm.d)
    gauss_all = incs @ (np.sqrt(cfg.dt) * dm.params.diff.T)
    drift = dm.params.mu * cfg.dt
    runs = []
    for j in range(cfg.n_paths):
        sx = np.empty((n + 1, dm.d)); dlx = np.empty((n, dm.d))
        sy = np.empty((n + 1, dm.d)); dly = np.empty((n, dm.d))
        sx[0], sy[0] = x0, y0
        cx, cy = x0.copy(), y0.copy()
        if vv is not None:
            sp = np.empty((n + 1, dm.d)); dlp = np.empty((n, dm.d))
            sp[0] = x0
            cp = x0.copy()
        for k in range(n):
            gauss = gauss_all[j, k, :]
            cx, dlx[k] = skorokhod_step(cx + gauss + drift, dm.p_mat,
                                        tol=cfg.lcp_tol, max_iter=cfg.lcp_max_iter)
            cy, dly[k] = skorokhod_step(cy + gauss + drift, dm.p_mat,
                                        tol=cfg.lcp_tol, max_iter=cfg.lcp_max_iter)
            sx[k + 1], sy[k + 1] = cx, cy
            if vv is not None:
                y_free = cp + gauss - vv * cfg.dt
                cp = np.maximum(y_free, 0.0)
                dlp[k] = cp - y_free
                sp[k + 1] = cp
        traj_plus = None
        if vv is not None:
            traj_plus = Trajectory(times=times, states=sp, dl=dlp,
                                   path_index=j, seed=cfg.seed)
        runs.append(CoupledRun(
            traj_x=Trajectory(times=times, states=sx, dl=dlx, path_index=j,
                              seed=cfg.seed),
            traj_y=Trajectory(times=times, states=sy, dl=dly, path_index=j,
                              seed=cfg.seed),
            traj_plus=traj_plus,
            provenance={"seed": cfg.seed, "path_index": j, "dt": cfg.dt,
                        "horizon": cfg.horizon, "sampler": _rng.SAMPLER_NAME,
                        "lcp_tol": cfg.lcp_tol},
        ))
    return runs


# ---------------------------------------------------------------------------
# trajectory persistence: float64-LE columnar binary + JSON sidecar; CSV view

def _trajectory_base(base: str) -> str:
    # accept either the bare base or one of the two file names it produces
    for ext in (".bin", ".json"):
        if base.endswith(ext):
            return base[:-len(ext)]
    return base


def save_trajectory(traj: Trajectory, base: str) -> None:
    """Write <base>.bin (concatenated float64 little-endian columns: t, then
    each state coordinate, then each dl coordinate zero-padded to grid
    length) and <base>.json describing the layout.  A trailing .bin or
    .json on base is ignored, so report file names can be passed back in."""
    base = _trajectory_base(base)
    n1, d = traj.states.shape
    dl_pad = np.zeros((n1, d))
    dl_pad[1:] = traj.dl
    cols = [traj.times] + [traj.states[:, i] for i in range(d)] \
        + [dl_pad[:, i] for i in range(d)]
    names = ["t"] + [f"x{i + 1}" for i in range(d)] + [f"dl{i + 1}" for i in range(d)]
    blob = np.concatenate([np.ascontiguousarray(c, dtype="<f8") for c in cols])
    blob.tofile(base + ".bin")
    sidecar = {
        "schema": SCHEMA_TRAJECTORY,
        "dtype": "<f8",
        "d": d,
        "rows": n1,
        "columns": names,
        "path_index": traj.path_index,
        "seed": traj.seed,
        "sampler": _rng.SAMPLER_NAME,
    }
    with open(base + ".json", "w", encoding="utf-8") as fh:
        json.dump(sidecar, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_trajectory(base: str) -> Trajectory:
    base = _trajectory_base(base)
    with open(base + ".json", "r", encoding="utf-8") as fh:
        sc = json.load(fh)
    if sc.get("schema") != SCHEMA_TRAJECTORY:
        raise ValueError(f"unrecognized trajectory schema {sc.get('schema')!r}")
    d, n1 = sc["d"], sc["rows"]
    blob = np.fromfile(base + ".bin", dtype="<f8")
    if blob.size != n1 * (2 * d + 1):
        raise ValueError("binary payload size does not match sidecar")
    cols = blob.reshape(2 * d + 1, n1)
    times = cols[0]
    states = cols[1:d + 1].T.copy()
    dl = cols[d + 1:].T[1:].copy()
    return Trajectory(times=times, states=states, dl=dl,
                      path_index=int(sc["path_index"]), seed=int(sc["seed"]))


def trajectory_csv(traj: Trajectory, path: str) -> None:
    """CSV view: header t,x1..xd,dl1..dld; dl row k holds the pushing
    increment over (t_{k-1}, t_k], zeros in the first row."""
    n1, d = traj.states.shape
    dl_pad = np.zeros((n1, d))
    dl_pad[1:] = traj.dl
    table = np.column_stack([traj.times, traj.states, dl_pad])
    header = ",".join(["t"] + [f"x{i + 1}" for i in range(d)]
                      + [f"dl{i + 1}" for i in range(d)])
    np.savetxt(path, table, delimiter=",", header=header, comments="")
