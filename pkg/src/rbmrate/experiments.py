"""Desk-scale Monte Carlo experiments backing the rate bounds.

Pathwise checks (coupling contraction, domination by the normally
reflected process), distance estimation against the stationary law,
marginal stationary tests for rank-based gap models, and hitting-time
statistics for the small-set machinery.  Heavy loops stream over path
chunks so memory stays flat; every path owns a counter-based substream,
so estimates are bit-identical for any chunking or thread count.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import stats

from . import _rng
from .bounds import CascadeConstants, constant_cascade, lambda_phi
from .model import DerivedModel
from .reflect import CoupledRun, SimConfig, Trajectory, skorokhod_step

__all__ = [
    "EtaCounter",
    "McEstimate",
    "CheckReport",
    "W1Curve",
    "StationaryTest",
    "DecayFit",
    "SmallSetReport",
    "count_eta",
    "contraction_check",
    "contraction_check_mc",
    "domination_check",
    "domination_check_mc",
    "sample_final_states",
    "estimate_w1",
    "marginal_stationary_test",
    "decay_fit",
    "rbmdrift_mc",
    "small_set_mc",
]

_BLOCK_SCALARS = 4_000_000  # per-block increment budget (floats)


@dataclass(frozen=True)
class EtaCounter:
    """Completion times of the renewal cycles: cycle k ends once every
    coordinate has touched zero at some time >= (end of cycle k-1) + 1."""

    eta_times: np.ndarray

    def count_at(self, t: float) -> int:
        return int(np.searchsorted(self.eta_times, t, side="right"))

    def count_grid(self, times) -> np.ndarray:
        return np.searchsorted(self.eta_times, np.asarray(times), side="right")


@dataclass(frozen=True)
class McEstimate:
    mean: float
    std_err: float
    n_paths: int
    ci95: tuple[float, float]


@dataclass(frozen=True)
class CheckReport:
    passed: bool
    n_paths: int
    n_violations: int
    worst_margin: float  # min over all checks of (allowed - observed)


@dataclass(frozen=True)
class W1Curve:
    times: np.ndarray
    estimates: list[McEstimate]
    coalesced_fraction: np.ndarray


@dataclass(frozen=True)
class StationaryTest:
    mean_rel_err: np.ndarray
    ks_stat: np.ndarray
    n_paths: int
    emp_means: np.ndarray
    exact_means: np.ndarray


@dataclass(frozen=True)
class DecayFit:
    rate: float
    intercept: float
    n_used: int


@dataclass(frozen=True)
class SmallSetReport:
    tau_moment: McEstimate
    zerohit_prob: McEstimate
    n_censored: int
    window: float
    compact_level: float
    sup_level: float


def _mc(values: np.ndarray) -> McEstimate:
    values = np.asarray(values, dtype=float)
    n = values.size
    mean = float(values.mean())
    se = float(values.std(ddof=1) / math.sqrt(n)) if n > 1 else math.inf
    return McEstimate(mean=mean, std_err=se, n_paths=n,
                      ci95=(mean - 1.96 * se, mean + 1.96 * se))


def _mc_from_moments(total: float, total_sq: float, n: int) -> McEstimate:
    mean = total / n
    var = max(total_sq / n - mean * mean, 0.0) * n / max(n - 1, 1)
    se = math.sqrt(var / n) if n > 1 else math.inf
    return McEstimate(mean=mean, std_err=se, n_paths=n,
                      ci95=(mean - 1.96 * se, mean + 1.96 * se))


def _chunks(n_paths: int, chunk: int) -> list[np.ndarray]:
    return [np.arange(lo, min(lo + chunk, n_paths))
            for lo in range(0, n_paths, chunk)]


def _map_ordered(fn, parts, threads: int) -> list:
    """Apply fn to each part, returning results in part order regardless of
    scheduling, so reductions are bit-stable under any thread count."""
    if threads <= 1 or len(parts) <= 1:
        return [fn(p) for p in parts]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, parts))


class _PathStreams:
    """One Philox substream per path in a chunk, consumed block by block."""

    def __init__(self, seed: int, indices):
        self.gens = [_rng.substream(seed, int(i)) for i in indices]

    def normals(self, n_steps: int, d: int) -> np.ndarray:
        return np.stack([g.standard_normal((n_steps, d)) for g in self.gens])

    def uniforms(self, n_steps: int, d: int) -> np.ndarray:
        return np.stack([g.random((n_steps, d)) for g in self.gens])

    def draw(self, sampler) -> np.ndarray:
        return np.stack([np.asarray(sampler(g), dtype=float) for g in self.gens])

    def keep(self, mask: np.ndarray) -> None:
        self.gens = [g for g, m in zip(self.gens, mask) if m]

    def __len__(self) -> int:
        return len(self.gens)


def _block_steps(n_rows: int, d: int) -> int:
    return max(1, min(8192, _BLOCK_SCALARS // max(1, n_rows * d)))


# ---------------------------------------------------------------------------
# cycle counting

def count_eta(traj: Trajectory) -> EtaCounter:
    """Cycle completion times from a simulated path.  A coordinate touches
    zero on a step exactly when its pushing increment is positive."""
    times = traj.times[1:]
    d = traj.d
    touch_times = [times[traj.dl[:, i] > 0.0] for i in range(d)]
    etas = []
    prev = 0.0
    while True:
        threshold = prev + 1.0
        cycle_end = prev
        complete = True
        for i in range(d):
            pos = np.searchsorted(touch_times[i], threshold, side="left")
            if pos >= touch_times[i].size:
                complete = False
                break
            cycle_end = max(cycle_end, float(touch_times[i][pos]))
        if not complete:
            break
        etas.append(cycle_end)
        prev = cycle_end
    return EtaCounter(eta_times=np.asarray(etas))


# ---------------------------------------------------------------------------
# pathwise inequality checks

def contraction_check(runs: list[CoupledRun], n_r: int,
                      slack: float = 1e-9) -> CheckReport:
    """Coupling contraction along each run started from (x, 0):

        ||X(t;x) - X(t;0)||_1 <= 2 ||x||_1 2^(-N(t)/n_r) + slack ||x||_1

    at every grid time, where N counts completed cycles of the x-path."""
    worst = math.inf
    violations = 0
    for run in runs:
        x0 = run.traj_x.states[0]
        if float(np.max(np.abs(run.traj_y.states[0]))) != 0.0:
            raise ValueError("contraction check requires the second start to be 0")
        l1x = float(np.sum(np.abs(x0)))
        counts = count_eta(run.traj_x).count_grid(run.traj_x.times)
        lhs = np.sum(np.abs(run.traj_x.states - run.traj_y.states), axis=1)
        rhs = 2.0 * l1x * np.exp2(-counts / n_r) + slack * l1x
        margin = float(np.min(rhs - lhs))
        worst = min(worst, margin)
        if margin < 0.0:
            violations += 1
    return CheckReport(passed=violations == 0, n_paths=len(runs),
                       n_violations=violations, worst_margin=worst)


def contraction_check_mc(dm: DerivedModel, x0, cfg: SimConfig, n_r: int,
                         slack: float = 1e-9, threads: int = 1,
                         chunk: int = 500) -> CheckReport:
    """Streaming version of contraction_check for large path counts: couples
    the reflected path from x0 with the one from 0 and verifies the cycle
    bound at every grid step without retaining trajectories."""
    x0 = np.asarray(x0, dtype=float)
    d = dm.d
    l1x = float(np.sum(np.abs(x0)))
    n_steps = cfg.n_steps
    sqdt_dt = np.sqrt(cfg.dt) * dm.params.diff.T
    drift = dm.params.mu * cfg.dt

    def run_chunk(indices: np.ndarray):
        streams = _PathStreams(cfg.seed, indices)
        m = indices.size
        sx = np.broadcast_to(x0, (m, d)).copy()
        sy = np.zeros((m, d))
        counts = np.zeros(m)
        prev_eta = np.zeros(m)
        first_touch = np.full((m, d), np.nan)
        worst = math.inf
        bad = np.zeros(m, dtype=bool)
        block = _block_steps(m, d)
        done = 0
        while done < n_steps:
            nb = min(block, n_steps - done)
            gauss = streams.normals(nb, d) @ sqdt_dt + drift
            for k in range(nb):
                t_now = (done + k + 1) * cfg.dt
                sx, dl = skorokhod_step(sx + gauss[:, k, :], dm.p_mat,
                                        tol=cfg.lcp_tol, max_iter=cfg.lcp_max_iter)
                sy, _ = skorokhod_step(sy + gauss[:, k, :], dm.p_mat,
                                       tol=cfg.lcp_tol, max_iter=cfg.lcp_max_iter)
                eligible = (dl > 0.0) & np.isnan(first_touch) \
                    & (t_now >= prev_eta + 1.0)[:, None]
                first_touch[eligible] = t_now
                complete = ~np.isnan(first_touch).any(axis=1)
                if np.any(complete):
                    counts[complete] += 1.0
                    prev_eta[complete] = first_touch[complete].max(axis=1)
                    first_touch[complete] = np.nan
                lhs = np.sum(np.abs(sx - sy), axis=1)
                rhs = 2.0 * l1x * np.exp2(-counts / n_r) + slack * l1x
                margin = rhs - lhs
                worst = min(worst, float(margin.min()))
                bad |= margin < 0.0
            done += nb
        return worst, int(bad.sum())

    parts = _map_ordered(run_chunk, _chunks(cfg.n_paths, chunk), threads)
    worst = min(p[0] for p in parts)
    violations = int(sum(p[1] for p in parts))
    return CheckReport(passed=violations == 0, n_paths=cfg.n_paths,
                       n_violations=violations, worst_margin=worst)


def domination_check_mc(dm: DerivedModel, x0, v, cfg: SimConfig,
                        slack: float = 1e-9, threads: int = 1,
                        chunk: int = 500) -> CheckReport:
    """Streaming domination check: R^{-1} X(t) <= R^{-1} X+(t) at every grid
    step for paths coupled through shared increments, without retaining
    trajectories."""
    x0 = np.asarray(x0, dtype=float)
    v = np.asarray(v, dtype=float)
    d = dm.d
    n_steps = cfg.n_steps
    sqdt_dt = np.sqrt(cfg.dt) * dm.params.diff.T
    drift = dm.params.mu * cfg.dt
    r_inv_t = dm.r_inv.T

    def run_chunk(indices: np.ndarray):
        streams = _PathStreams(cfg.seed, indices)
        m = indices.size
        sx = np.broadcast_to(x0, (m, d)).copy()
        sp = np.broadcast_to(x0, (m, d)).copy()
        worst = math.inf
        bad = np.zeros(m, dtype=bool)
        block = _block_steps(m, d)
        done = 0
        while done < n_steps:
            nb = min(block, n_steps - done)
            gauss = streams.normals(nb, d) @ sqdt_dt
            for k in range(nb):
                gk = gauss[:, k, :]
                sx, _ = skorokhod_step(sx + gk + drift, dm.p_mat,
                                       tol=cfg.lcp_tol, max_iter=cfg.lcp_max_iter)
                sp = np.maximum(sp + gk - v * cfg.dt, 0.0)
                scale = 1.0 + np.maximum(np.max(np.abs(sx), axis=1),
                                         np.max(np.abs(sp), axis=1))
                margin = (sp - sx) @ r_inv_t + slack * scale[:, None]
                worst = min(worst, float(margin.min()))
                bad |= np.any(margin < 0.0, axis=1)
            done += nb
        return worst, int(bad.sum())

    parts = _map_ordered(run_chunk, _chunks(cfg.n_paths, chunk), threads)
    worst = min(p[0] for p in parts)
    violations = int(sum(p[1] for p in parts))
    return CheckReport(passed=violations == 0, n_paths=cfg.n_paths,
                       n_violations=violations, worst_margin=worst)


def domination_check(runs: list[CoupledRun], dm: DerivedModel,
                     slack: float = 1e-9) -> CheckReport:
    """R^{-1} X(t) <= R^{-1} X+(t) componentwise along each coupled run,
    with additive slack scaled by 1 + the running state magnitude."""
    worst = math.inf
    violations = 0
    for run in runs:
        if run.traj_plus is None:
            raise ValueError("domination check needs runs with a comparison path")
        lhs = run.traj_x.states @ dm.r_inv.T
        rhs = run.traj_plus.states @ dm.r_inv.T
        scale = 1.0 + np.maximum(np.max(np.abs(run.traj_x.states), axis=1),
                                 np.max(np.abs(run.traj_plus.states), axis=1))
        margin = float(np.min(rhs - lhs + slack * scale[:, None]))
        worst = min(worst, margin)
        if margin < 0.0:
            violations += 1
    return CheckReport(passed=violations == 0, n_paths=len(runs),
                       n_violations=violations, worst_margin=worst)


# ---------------------------------------------------------------------------
# streaming final-state sampling

def sample_final_states(dm: DerivedModel, x0, t: float, cfg: SimConfig,
                        threads: int = 1, chunk: int = 20_000,
                        bridge: bool = False) -> np.ndarray:
    """Final states X(t) for cfg.n_paths independent paths, shape
    (n_paths, d); memory stays bounded by the block budget.

    With bridge=True the one-step transition is sampled exactly by drawing
    the within-step running minimum of each free coordinate path (a Brownian
    bridge functional), which removes the O(sqrt(dt)) boundary bias of grid
    reflection.  Exact only for independent coordinates, so it requires
    P = 0 and diagonal covariance; one extra uniform per step and coordinate
    is consumed after the block of normals."""
    x0 = np.asarray(x0, dtype=float)
    n_steps = int(round(t / cfg.dt))
    if n_steps > 1e9:
        raise ValueError("t/dt exceeds 1e9 grid steps")
    sqdt_dt = np.sqrt(cfg.dt) * dm.params.diff.T
    drift = dm.params.mu * cfg.dt
    d = dm.d
    if bridge:
        off_diag = dm.sigma_mat - np.diag(np.diag(dm.sigma_mat))
        if dm.p_mat.any() or off_diag.any():
            raise ValueError("bridge sampling needs independent coordinates "
                             "(P = 0 and diagonal covariance)")
        var_dt = np.diag(dm.sigma_mat) * cfg.dt

    def run_chunk(indices: np.ndarray) -> np.ndarray:
        streams = _PathStreams(cfg.seed, indices)
        states = np.broadcast_to(x0, (indices.size, d)).copy()
        block = _block_steps(indices.size, d)
        done = 0
        while done < n_steps:
            nb = min(block, n_steps - done)
            gauss = streams.normals(nb, d) @ sqdt_dt + drift
            if bridge:
                lnu = np.log1p(-streams.uniforms(nb, d))
                for k in range(nb):
                    free = states + gauss[:, k, :]
                    diff = free - states
                    disc = diff * diff - 2.0 * var_dt * lnu[:, k, :]
                    low = 0.5 * (states + free - np.sqrt(np.maximum(disc, 0.0)))
                    states = free - np.minimum(low, 0.0)
            else:
                for k in range(nb):
                    states, _ = skorokhod_step(states + gauss[:, k, :], dm.p_mat,
                                               tol=cfg.lcp_tol,
                                               max_iter=cfg.lcp_max_iter)
            done += nb
        return states

    parts = _map_ordered(run_chunk, _chunks(cfg.n_paths, chunk), threads)
    return np.concatenate(parts, axis=0)


# ---------------------------------------------------------------------------
# Wasserstein distance estimation by synchronous coupling

def estimate_w1(dm: DerivedModel, x0, t_evals, cfg: SimConfig,
                stationary_sampler=None, burn_in: float | None = None,
                threads: int = 1, chunk: int = 2_000) -> W1Curve:
    """Upper-biased W1 estimate: E ||X(t;x0) - X(t;Y0)||_1 with Y0 drawn
    from the stationary law and both paths driven by the same increments.

    Needs either an exact stationary sampler (rng -> d-vector) or a burn-in
    long enough to stand in for one; with neither feasible the call fails
    rather than silently degrade.  Coupled pairs that have met exactly are
    dropped from the stepping loop; their distance stays 0 by construction.
    """
    x0 = np.asarray(x0, dtype=float)
    t_evals = np.asarray(sorted(float(t) for t in t_evals))
    if t_evals.size == 0 or t_evals[0] < 0.0:
        raise ValueError("t_evals must be nonempty and nonnegative")
    d = dm.d
    if stationary_sampler is None:
        if burn_in is None:
            from .bounds import optimal_v, theta_functionals
            tf = theta_functionals(dm)
            ow = optimal_v(tf, dm)
            ws = lambda_phi(ow.v, dm.sigma)
            burn_in = max(10.0 * ws.t_v, 2.0 * float(t_evals[-1]))
        if (burn_in + t_evals[-1]) / cfg.dt > 1e9:
            raise ValueError(
                "no stationary sampler and the default burn-in "
                f"{burn_in:.3g} is out of reach at dt = {cfg.dt}; "
                "provide stationary_sampler or a smaller burn_in")
    eval_steps = np.rint(t_evals / cfg.dt).astype(np.int64)
    snapped = eval_steps * cfg.dt
    sqdt_dt = np.sqrt(cfg.dt) * dm.params.diff.T
    drift = dm.params.mu * cfg.dt
    burn_steps = 0 if stationary_sampler is not None else int(round(burn_in / cfg.dt))

    def run_chunk(indices: np.ndarray):
        streams = _PathStreams(cfg.seed, indices)
        m = indices.size
        sx = np.broadcast_to(x0, (m, d)).copy()
        if stationary_sampler is not None:
            sy = streams.draw(stationary_sampler)
            if sy.shape != (m, d) or np.any(sy < 0.0):
                raise ValueError("stationary sampler must return nonnegative d-vectors")
        else:
            sy = np.broadcast_to(x0, (m, d)).copy()
            done = 0
            while done < burn_steps:
                nb = min(_block_steps(m, d), burn_steps - done)
                gauss = streams.normals(nb, d) @ sqdt_dt + drift
                for k in range(nb):
                    sy, _ = skorokhod_step(sy + gauss[:, k, :], dm.p_mat,
                                           tol=cfg.lcp_tol, max_iter=cfg.lcp_max_iter)
                done += nb
        sums = np.zeros(eval_steps.size)
        sqs = np.zeros(eval_steps.size)
        alive = np.zeros(eval_steps.size)
        step_now = 0
        for j, target in enumerate(eval_steps):
            while step_now < target and len(streams):
                nb = min(_block_steps(len(streams), d), int(target - step_now))
                gauss = streams.normals(nb, d) @ sqdt_dt + drift
                for k in range(nb):
                    sx, _ = skorokhod_step(sx + gauss[:, k, :], dm.p_mat,
                                           tol=cfg.lcp_tol, max_iter=cfg.lcp_max_iter)
                    sy, _ = skorokhod_step(sy + gauss[:, k, :], dm.p_mat,
                                           tol=cfg.lcp_tol, max_iter=cfg.lcp_max_iter)
                step_now += nb
                apart = np.any(sx != sy, axis=1)
                if not np.all(apart):
                    sx, sy = sx[apart], sy[apart]
                    streams.keep(apart)
            if len(streams):
                dist = np.sum(np.abs(sx - sy), axis=1)
                sums[j] += float(dist.sum())
                sqs[j] += float((dist * dist).sum())
            alive[j] = len(streams)
        return sums, sqs, alive

    parts = _map_ordered(run_chunk, _chunks(cfg.n_paths, chunk), threads)
    sums = np.sum([p[0] for p in parts], axis=0)
    sqs = np.sum([p[1] for p in parts], axis=0)
    alive = np.sum([p[2] for p in parts], axis=0)
    ests = [_mc_from_moments(sums[j], sqs[j], cfg.n_paths)
            for j in range(eval_steps.size)]
    return W1Curve(times=snapped, estimates=ests,
                   coalesced_fraction=1.0 - alive / cfg.n_paths)


# ---------------------------------------------------------------------------
# stationary-law verification for gap models

def marginal_stationary_test(dm: DerivedModel, rates, t_end: float,
                             cfg: SimConfig, threads: int = 1,
                             bridge: bool = False) -> StationaryTest:
    """Simulate to t_end from 0 and compare each marginal against the
    exponential law with the given rate: relative mean error and the
    Kolmogorov-Smirnov statistic per coordinate."""
    rates = np.asarray(rates, dtype=float)
    if rates.shape != (dm.d,) or np.any(rates <= 0.0):
        raise ValueError("rates must be a positive d-vector")
    finals = sample_final_states(dm, np.zeros(dm.d), t_end, cfg, threads=threads,
                                 bridge=bridge)
    exact = 1.0 / rates
    emp = finals.mean(axis=0)
    ks = np.array([
        stats.kstest(finals[:, i], "expon", args=(0.0, exact[i])).statistic
        for i in range(dm.d)
    ])
    return StationaryTest(mean_rel_err=np.abs(emp - exact) / exact,
                          ks_stat=ks, n_paths=cfg.n_paths,
                          emp_means=emp, exact_means=exact)


# ---------------------------------------------------------------------------
# decay-rate fitting

def decay_fit(times, means, std_errs) -> DecayFit:
    """Weighted least squares for log mean = intercept - rate * t, keeping
    points whose mean clears 3 standard errors.  Degenerate data (under 4
    usable points) raises instead of returning a junk rate."""
    times = np.asarray(times, dtype=float)
    means = np.asarray(means, dtype=float)
    std_errs = np.asarray(std_errs, dtype=float)
    keep = (means > 3.0 * std_errs) & (means > 0.0)
    if int(keep.sum()) < 4:
        raise ValueError(
            f"decay fit degenerate: only {int(keep.sum())} of {means.size} "
            "points have mean above 3 standard errors")
    t, m, s = times[keep], means[keep], std_errs[keep]
    w = m / np.where(s > 0.0, s, np.min(s[s > 0.0], initial=1.0))
    slope, intercept = np.polyfit(t, np.log(m), 1, w=w)
    return DecayFit(rate=float(-slope), intercept=float(intercept),
                    n_used=int(keep.sum()))


# ---------------------------------------------------------------------------
# one-dimensional sup bound verification

def rbmdrift_mc(mu_drift: float, sigma_diff: float, level: float, x0: float,
                cfg: SimConfig, threads: int = 1,
                chunk: int = 20_000) -> McEstimate:
    """P(sup over the grid of the 1-d reflected path with drift -mu_drift
    reaches level) from cfg.n_paths paths started at x0 in [0, level/2]."""
    if not 0.0 <= x0 <= level / 2.0:
        raise ValueError(f"x0 = {x0} outside the admissible range [0, {level / 2}]")
    n_steps = cfg.n_steps
    scale = sigma_diff * math.sqrt(cfg.dt)
    shift = -mu_drift * cfg.dt

    def run_chunk(indices: np.ndarray) -> np.ndarray:
        streams = _PathStreams(cfg.seed, indices)
        m = indices.size
        hit = np.zeros(m, dtype=bool)
        cur = np.full(m, float(x0))
        block = _block_steps(m, 1)
        done = 0
        while done < n_steps:
            nb = min(block, n_steps - done)
            incs = streams.normals(nb, 1)[:, :, 0] * scale + shift
            # closed-form running reflection over the block:
            # X_k = max(X_0 + S_k, S_k - min_{j<=k} S_j)
            s = np.cumsum(incs, axis=1)
            x_blk = np.maximum(cur[:, None] + s, s - np.minimum.accumulate(s, axis=1))
            hit |= x_blk.max(axis=1) >= level
            cur = x_blk[:, -1]
            done += nb
        return hit.astype(float)

    parts = _map_ordered(run_chunk, _chunks(cfg.n_paths, chunk), threads)
    return _mc(np.concatenate(parts))


# ---------------------------------------------------------------------------
# small-set / hitting-time statistics

def small_set_mc(dm: DerivedModel, v, x0, cfg: SimConfig,
                 a_used: float = 68.0, threads: int = 1,
                 chunk: int = 2_000,
                 cascade: CascadeConstants | None = None) -> SmallSetReport:
    """Hitting statistics for the coupled pair (reflected path, normally
    reflected comparison path with drift -v) from x0.

    tau_moment estimates E exp((Lambda / 2 a_used) tau) where tau is the
    first grid time the comparison path enters the compact set
    {||y||_{inf,v} <= a_used log phi(v)}; paths that never enter within the
    horizon are censored at it.  zerohit_prob estimates the probability
    that every coordinate of the reflected path touches zero by time
    c2z T(v) while the comparison path stays below c1z M(v) in the weighted
    norm.  The horizon must cover the window c2z T(v)."""
    x0 = np.asarray(x0, dtype=float)
    v = np.asarray(v, dtype=float)
    if x0.shape != (dm.d,) or v.shape != (dm.d,):
        raise ValueError("x0 and v must be d-vectors")
    if cascade is None:
        cascade = constant_cascade(a_used)
    ws = lambda_phi(v, dm.sigma)
    window = cascade.c2z * ws.t_v
    if cfg.horizon < window:
        raise ValueError(
            f"horizon {cfg.horizon:.6g} shorter than the hitting window "
            f"c2z T(v) = {window:.6g}")
    wnorm_x0 = float(np.max(v * x0 / dm.sigma ** 2))
    if wnorm_x0 > a_used * ws.m_v + 1e-12:
        raise ValueError(
            f"start too far out: ||x0||_inf,v = {wnorm_x0:.6g} exceeds "
            f"a_used M(v) = {a_used * ws.m_v:.6g}")
    compact_level = a_used * math.log(ws.phi_v)
    sup_level = cascade.c1z * ws.m_v
    d = dm.d
    n_steps = cfg.n_steps
    window_steps = int(math.ceil(window / cfg.dt))
    weight = v / dm.sigma ** 2
    sqdt_dt = np.sqrt(cfg.dt) * dm.params.diff.T
    drift = dm.params.mu * cfg.dt
    rate = ws.lambda_v / (2.0 * a_used)

    def run_chunk(indices: np.ndarray):
        streams = _PathStreams(cfg.seed, indices)
        m = indices.size
        sx = np.broadcast_to(x0, (m, d)).copy()
        sp = np.broadcast_to(x0, (m, d)).copy()
        tau = np.full(m, np.nan)
        first_touch = np.full((m, d), np.nan)
        sup_ok = np.ones(m, dtype=bool)
        # entry check at t = 0
        if float(np.max(weight * x0)) <= compact_level:
            tau[:] = 0.0
        block = _block_steps(m, d)
        done = 0
        while done < n_steps:
            nb = min(block, n_steps - done)
            gauss = streams.normals(nb, d) @ sqdt_dt
            for k in range(nb):
                t_now = (done + k + 1) * cfg.dt
                gk = gauss[:, k, :]
                sx, dl = skorokhod_step(sx + gk + drift, dm.p_mat,
                                        tol=cfg.lcp_tol, max_iter=cfg.lcp_max_iter)
                sp = np.maximum(sp + gk - v * cfg.dt, 0.0)
                wn = np.max(sp * weight, axis=1)
                fresh = np.isnan(tau) & (wn <= compact_level)
                tau[fresh] = t_now
                if done + k < window_steps:
                    sup_ok &= wn <= sup_level
                    if t_now >= 1.0:
                        touched = dl > 0.0
                        unset = np.isnan(first_touch)
                        first_touch[touched & unset] = t_now
            done += nb
        censored = np.isnan(tau)
        tau_filled = np.where(censored, cfg.horizon, tau)
        eta1 = first_touch.max(axis=1)  # nan if any coordinate never touched
        zerohit = sup_ok & ~np.isnan(eta1) & (eta1 <= window)
        return (np.exp(rate * tau_filled), zerohit.astype(float),
                int(censored.sum()))

    parts = _map_ordered(run_chunk, _chunks(cfg.n_paths, chunk), threads)
    moments = np.concatenate([p[0] for p in parts])
    hits = np.concatenate([p[1] for p in parts])
    n_censored = int(sum(p[2] for p in parts))
    return SmallSetReport(tau_moment=_mc(moments), zerohit_prob=_mc(hits),
                          n_censored=n_censored, window=window,
                          compact_level=compact_level, sup_level=sup_level)
