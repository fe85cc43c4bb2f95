"""Command-line interface.

Subcommands: validate, bounds, simulate, couple, stationary, verify.
Reports are JSON with stable key ordering and a schema tag; timestamps and
thread counts live in a runtime section that --deterministic suppresses,
so deterministic reports are byte-identical for any --threads value.
Exit codes: 0 pass, 1 a verification check failed, 2 configuration error.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import time
from dataclasses import dataclass, field

import numpy as np

from . import bounds as bnd
from . import catalog, experiments, model, reflect

SCHEMA_REPORT = "rbmrate/report/v1"


@dataclass(frozen=True)
class RunConfig:
    command: str
    model_source: str | None = None
    rank_source: str | None = None
    x0: str | None = None
    y0: str | None = None
    v: str | None = None
    t: float | None = None
    a_used: float | None = None
    seed: int = 0
    paths: int = 100
    dt: float = 0.01
    horizon: float = 10.0
    threads: int = 1
    deterministic: bool = False
    out: str | None = None
    max_ks: float | None = None
    max_mean_err: float | None = None
    extra: dict = field(default_factory=dict)


def _parse_vec(text: str | None, d: int, default: float = 0.0) -> np.ndarray:
    if text is None:
        return np.full(d, default)
    parts = [p for p in text.replace(" ", "").split(",") if p]
    vals = [float(p) for p in parts]
    if len(vals) == 1:
        return np.full(d, vals[0])
    if len(vals) != d:
        raise ValueError(f"expected 1 or {d} comma-separated values, got {len(vals)}")
    return np.asarray(vals)


def _load_params(cfg: RunConfig) -> model.ModelParams:
    if (cfg.model_source is None) == (cfg.rank_source is None):
        raise ValueError("exactly one of --model and --rank is required")
    if cfg.model_source is not None:
        return model.load_model(cfg.model_source)
    spec = catalog.parse_rank_spec(cfg.rank_source)
    return catalog.rank_based_params(spec)


def _config_echo(cfg: RunConfig) -> dict:
    echo = {
        "command": cfg.command,
        "seed": cfg.seed,
        "paths": cfg.paths,
        "dt": cfg.dt,
        "horizon": cfg.horizon,
    }
    for key in ("model_source", "rank_source", "x0", "y0", "v", "t", "a_used"):
        val = getattr(cfg, key)
        if val is not None:
            echo[key] = val
    return echo


def emit_report(result: dict, cfg: RunConfig, started: float) -> str:
    payload = {
        "schema": SCHEMA_REPORT,
        "config": _config_echo(cfg),
        "result": result,
    }
    if not cfg.deterministic:
        payload["runtime"] = {
            "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
            "elapsedSec": round(time.time() - started, 3),
            "threads": cfg.threads,
        }
    text = json.dumps(payload, sort_keys=True, indent=2) + "\n"
    if cfg.out:
        with open(cfg.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return text


def _cmd_validate(cfg: RunConfig, started: float) -> int:
    params = _load_params(cfg)
    rep = model.validate_params(params)
    emit_report({
        "a1Substochastic": rep.a1_substochastic,
        "a1Transient": rep.a1_transient,
        "a2Stable": rep.a2_stable,
        "a3Pd": rep.a3_pd,
        "spectralRadius": rep.spectral_radius,
        "admissible": rep.admissible,
        "messages": rep.messages,
    }, cfg, started)
    return 0 if rep.admissible else 1


def _cmd_bounds(cfg: RunConfig, started: float) -> int:
    params = _load_params(cfg)
    dm = model.derive(params)
    x0 = _parse_vec(cfg.x0, dm.d)
    cascade = bnd.constant_cascade(cfg.a_used) if cfg.a_used is not None else None
    rep = bnd.bound_report(dm, x0, cascade=cascade)
    tf, cc = rep.functionals, rep.cascade
    result = {
        "nR": tf.n_r,
        "aTheta": tf.a_theta,
        "bTheta": tf.b_theta,
        "R1": tf.r1,
        "R2": tf.r2,
        "A0": cc.a0,
        "D2": cc.d2,
        "aUsed": cc.a_used,
        "C1z": cc.c1z,
        "C2z": cc.c2z,
        "deltaP": cc.delta_p,
        "D1": cc.d1,
        "t0": cc.t0,
        "C1x": rep.c1x,
        "C2x": rep.c2x,
        "tMin": rep.t_min,
        "tRelBound": rep.t_rel_bound,
        "vTilde": rep.v_tilde.tolist(),
        "lambdaV": rep.lambda_v,
        "phiV": rep.phi_v,
        "tV": rep.t_v,
        "mV": rep.m_v,
    }
    if cfg.t is not None:
        bv = bnd.wasserstein_bound(dm, x0, cfg.t, cascade=cascade)
        result["w1AtT"] = {"t": cfg.t, "value": bv.value, "valid": bv.valid}
    emit_report(result, cfg, started)
    return 0


def _cmd_simulate(cfg: RunConfig, started: float) -> int:
    params = _load_params(cfg)
    dm = model.derive(params)
    x0 = _parse_vec(cfg.x0, dm.d)
    sim = reflect.SimConfig(dt=cfg.dt, horizon=cfg.horizon, n_paths=cfg.paths,
                            seed=cfg.seed)
    trajs = reflect.simulate_rbm(dm, x0, sim)
    files = []
    traj_base = cfg.extra.get("traj_out")
    if traj_base:
        for traj in trajs:
            base = f"{traj_base}_{traj.path_index:04d}"
            reflect.save_trajectory(traj, base)
            reflect.trajectory_csv(traj, base + ".csv")
            files.append(base)
    finals = np.stack([t.states[-1] for t in trajs])
    emit_report({
        "nPaths": cfg.paths,
        "nSteps": sim.n_steps,
        "finalMean": finals.mean(axis=0).tolist(),
        "finalMeanL1": float(np.abs(finals).sum(axis=1).mean()),
        "files": files,
        "sampler": reflect._rng.SAMPLER_NAME,
    }, cfg, started)
    return 0


def _cmd_couple(cfg: RunConfig, started: float) -> int:
    params = _load_params(cfg)
    dm = model.derive(params)
    x0 = _parse_vec(cfg.x0, dm.d, default=1.0)
    y0 = _parse_vec(cfg.y0, dm.d, default=0.0)
    tf = bnd.theta_functionals(dm)
    v = None
    if cfg.v == "auto":
        v = bnd.optimal_v(tf, dm).v
    elif cfg.v is not None:
        v = _parse_vec(cfg.v, dm.d)
    sim = reflect.SimConfig(dt=cfg.dt, horizon=cfg.horizon, n_paths=cfg.paths,
                            seed=cfg.seed)
    runs = reflect.simulate_coupled(dm, x0, y0, sim, v=v)
    result: dict = {"nR": tf.n_r}
    ok = True
    if float(np.max(np.abs(y0))) == 0.0:
        con = experiments.contraction_check(runs, tf.n_r)
        result["contraction"] = {
            "passed": con.passed, "nPaths": con.n_paths,
            "nViolations": con.n_violations, "worstMargin": con.worst_margin,
        }
        ok = ok and con.passed
    if v is not None:
        dom = experiments.domination_check(runs, dm)
        result["domination"] = {
            "passed": dom.passed, "nPaths": dom.n_paths,
            "nViolations": dom.n_violations, "worstMargin": dom.worst_margin,
        }
        ok = ok and dom.passed
    emit_report(result, cfg, started)
    return 0 if ok else 1


def _cmd_stationary(cfg: RunConfig, started: float) -> int:
    if cfg.rank_source is None:
        raise ValueError("stationary requires --rank (product-form law needed)")
    spec = catalog.parse_rank_spec(cfg.rank_source)
    law = catalog.stationary_gap_law(spec)
    dm = model.derive(catalog.rank_based_params(spec))
    t_end = cfg.t if cfg.t is not None else 30.0
    sim = reflect.SimConfig(dt=cfg.dt, horizon=max(t_end, cfg.dt),
                            n_paths=cfg.paths, seed=cfg.seed)
    rep = experiments.marginal_stationary_test(dm, law.rates, t_end, sim,
                                               threads=cfg.threads)
    result = {
        "rates": law.rates.tolist(),
        "skewOk": law.skew_ok,
        "empMeans": rep.emp_means.tolist(),
        "exactMeans": rep.exact_means.tolist(),
        "meanRelErr": rep.mean_rel_err.tolist(),
        "ksStat": rep.ks_stat.tolist(),
        "nPaths": rep.n_paths,
    }
    ok = True
    if cfg.max_ks is not None:
        ok = ok and bool(np.all(rep.ks_stat <= cfg.max_ks))
    if cfg.max_mean_err is not None:
        ok = ok and bool(np.all(rep.mean_rel_err <= cfg.max_mean_err))
    result["passed"] = ok
    emit_report(result, cfg, started)
    return 0 if ok else 1


def _drift_check(dm: model.DerivedModel, v: np.ndarray,
                 cascade: bnd.CascadeConstants, seed: int,
                 n_points: int = 200) -> dict:
    """Spot check of the potential drift inequality outside the compact set."""
    scales = bnd.lambda_phi(v, dm.sigma)
    ceiling = -scales.lambda_v / (2.0 * cascade.a_used) + 1e-12
    level = cascade.a_used * np.log(scales.phi_v)
    rng = np.random.Generator(np.random.Philox(
        key=np.array([seed, 2 ** 32 + 1], dtype=np.uint64)))
    violations = 0
    for _ in range(n_points):
        y = np.abs(rng.standard_normal(dm.d)) + 1e-3
        y *= level * (1.0 + rng.uniform(0.01, 20.0)) / float(np.max(v * y / dm.sigma ** 2))
        if bnd.lyapunov(y, v, dm, a_used=cascade.a_used).drift > ceiling:
            violations += 1
    return {"nPoints": n_points, "violations": violations,
            "ok": violations == 0}


def _small_set_check(dm: model.DerivedModel, v: np.ndarray, x0: np.ndarray,
                     cascade: bnd.CascadeConstants, cfg: RunConfig) -> dict:
    """Hitting-time moment and small-set return probability at desk scale.
    dt is coarsened so the window fits in at most 20k grid steps."""
    scales = bnd.lambda_phi(v, dm.sigma)
    window = cascade.c2z * scales.t_v
    horizon = 1.25 * window
    wn = model.weighted_norms(x0, v, dm).norm_inf_v
    cap = 0.9 * cascade.a_used * scales.m_v
    start = x0 if wn <= cap else x0 * (cap / wn)
    wn = min(wn, cap)
    sim = reflect.SimConfig(dt=max(cfg.dt, horizon / 20_000.0), horizon=horizon,
                            n_paths=cfg.paths, seed=cfg.seed)
    rep = experiments.small_set_mc(dm, v, start, sim, a_used=cascade.a_used,
                                   threads=cfg.threads, chunk=max(cfg.paths, 1),
                                   cascade=cascade)
    tau_cap = float(np.exp(3.0 * wn / cascade.a_used))
    tau_ok = rep.tau_moment.mean <= tau_cap + 3.0 * rep.tau_moment.std_err
    hit_ok = rep.zerohit_prob.mean >= 0.5 - 3.0 * rep.zerohit_prob.std_err
    return {
        "tauMoment": rep.tau_moment.mean,
        "tauBound": tau_cap,
        "zerohitProb": rep.zerohit_prob.mean,
        "nCensored": rep.n_censored,
        "ok": bool(tau_ok and hit_ok and rep.n_censored == 0),
    }


def _sup_bound_check(cfg: RunConfig) -> dict:
    """One-dimensional sup exceedance versus its closed-form bound on a
    fixed canonical instance."""
    mu, sig, level = 1.0, 1.0, 4.0
    horizon = min(cfg.horizon, 10.0)
    sim = reflect.SimConfig(dt=cfg.dt, horizon=horizon, n_paths=cfg.paths,
                            seed=cfg.seed)
    est = experiments.rbmdrift_mc(mu, sig, level, 0.0, sim,
                                  threads=cfg.threads)
    bound = bnd.rbm_sup_bound(mu, sig, level, horizon).value
    return {"empirical": est.mean, "bound": bound,
            "ok": bool(est.mean <= bound + 3.0 * est.std_err)}


def _w1_check(dm: model.DerivedModel, x0: np.ndarray, cfg: RunConfig) -> dict:
    """Distance estimate against the explicit bound at valid times, with a
    dt coarse enough to reach the validity threshold in 20k steps."""
    t_min = bnd.wasserstein_bound(dm, x0, 1.0).terms["t_min"]
    ts = [t_min * 1.001, t_min * 1.1, t_min * 1.2]
    sampler = None
    if cfg.rank_source is not None:
        try:
            law = catalog.stationary_gap_law(catalog.parse_rank_spec(cfg.rank_source))
            scale = 1.0 / law.rates

            def sampler(rng):
                return rng.exponential(scale)
        except ValueError:
            sampler = None
    sim = reflect.SimConfig(dt=max(cfg.dt, 4.0 * t_min / 20_000.0),
                            horizon=ts[-1] + 1.0, n_paths=cfg.paths,
                            seed=cfg.seed)
    curve = experiments.estimate_w1(dm, x0, ts, sim,
                                    stationary_sampler=sampler,
                                    threads=cfg.threads,
                                    chunk=max(cfg.paths, 1))
    rows = []
    ok = True
    for t, est in zip(curve.times, curve.estimates):
        bv = bnd.wasserstein_bound(dm, x0, float(t))
        ok = bool(ok and bv.valid and est.mean <= bv.value + 3.0 * est.std_err)
        rows.append((float(t), est.mean, est.std_err, bv.value))
    return {
        "times": [r[0] for r in rows],
        "means": [r[1] for r in rows],
        "stdErrs": [r[2] for r in rows],
        "bounds": [r[3] for r in rows],
        "ok": ok,
    }


def _write_w1_csv(path: str, w1: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("t,mean,std_err,bound\n")
        for t, m, s, b in zip(w1["times"], w1["means"], w1["stdErrs"],
                              w1["bounds"]):
            fh.write(f"{t:.17g},{m:.17g},{s:.17g},{b:.17g}\n")


def _cmd_verify(cfg: RunConfig, started: float) -> int:
    params = _load_params(cfg)
    dm = model.derive(params)
    rep = model.validate_params(params)
    tf = bnd.theta_functionals(dm)
    cascade = bnd.default_cascade(tf)
    v = bnd.optimal_v(tf, dm).v
    x0 = _parse_vec(cfg.x0, dm.d, default=1.0)
    sim = reflect.SimConfig(dt=cfg.dt, horizon=cfg.horizon, n_paths=cfg.paths,
                            seed=cfg.seed)
    runs = reflect.simulate_coupled(dm, x0, np.zeros(dm.d), sim, v=v)
    con = experiments.contraction_check(runs, tf.n_r)
    dom = experiments.domination_check(runs, dm)
    rng = np.random.Generator(np.random.Philox(key=np.array([cfg.seed, 2 ** 32],
                                                            dtype=np.uint64)))
    z = rng.normal(scale=3.0, size=(2000, dm.d))
    x, dl = reflect.skorokhod_step(z, dm.p_mat)
    resid = float(np.max(np.abs(x - z - dl @ (np.eye(dm.d) - dm.p_mat).T)))
    resid_ok = resid <= 1e-12 * max(1.0, float(np.max(np.abs(z))))

    drift = _drift_check(dm, v, cascade, cfg.seed)
    small = _small_set_check(dm, v, x0, cascade, cfg)
    sup = _sup_bound_check(cfg)
    w1 = _w1_check(dm, x0, cfg)

    files = []
    if cfg.out:
        stem = cfg.out[:-5] if cfg.out.endswith(".json") else cfg.out
        csv_path = stem + "_w1.csv"
        _write_w1_csv(csv_path, w1)
        files.append(csv_path)

    ok = (rep.admissible and con.passed and dom.passed and resid_ok
          and drift["ok"] and small["ok"] and sup["ok"] and w1["ok"])
    emit_report({
        "admissible": rep.admissible,
        "contractionPassed": con.passed,
        "dominationPassed": dom.passed,
        "projectionResidual": resid,
        "projectionResidualOk": resid_ok,
        "drift": drift,
        "smallSet": small,
        "supBound": sup,
        "w1": w1,
        "files": files,
        "passed": ok,
    }, cfg, started)
    return 0 if ok else 1


_COMMANDS = {
    "validate": _cmd_validate,
    "bounds": _cmd_bounds,
    "simulate": _cmd_simulate,
    "couple": _cmd_couple,
    "stationary": _cmd_stationary,
    "verify": _cmd_verify,
}


def run(cfg: RunConfig) -> int:
    started = time.time()
    try:
        handler = _COMMANDS[cfg.command]
    except KeyError:
        print(f"unknown command {cfg.command!r}", file=sys.stderr)
        return 2
    try:
        return handler(cfg, started)
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def _add_common(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--model", dest="model_source", metavar="FILE",
                    help="model JSON file with keys d, mu, D, R")
    sp.add_argument("--rank", dest="rank_source", metavar="SPEC",
                    help="rank spec: atlas:<n> or a JSON file {deltas, sigmas}")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--paths", type=int, default=100)
    sp.add_argument("--dt", type=float, default=0.01)
    sp.add_argument("--horizon", type=float, default=10.0)
    sp.add_argument("--threads", type=int,
                    default=int(os.environ.get("RBMRATE_THREADS", "1")))
    sp.add_argument("--deterministic", action="store_true",
                    help="suppress timestamps and runtime metadata in reports")
    sp.add_argument("--out", help="write the report (or trajectory base) here")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="rbmrate",
        description="rate bounds and grid couplings for reflected Brownian motion",
    )
    sub = ap.add_subparsers(dest="command", required=True)
    for name, helptext in [
        ("validate", "check the admissibility assumptions"),
        ("bounds", "compute every rate constant and distance bound"),
        ("simulate", "simulate reflected paths, optionally dumping trajectories"),
        ("couple", "run synchronous couplings and pathwise checks"),
        ("stationary", "compare simulated gap marginals with the product law"),
        ("verify", "full inequality battery: contraction, domination, "
                   "projection, drift, small set, sup bound, distance bound"),
    ]:
        sp = sub.add_parser(name, help=helptext)
        _add_common(sp)
        if name in ("bounds", "simulate", "couple", "verify"):
            sp.add_argument("--x0", help="start vector, comma separated or scalar")
        if name == "simulate":
            sp.add_argument("--traj-out", dest="traj_out", metavar="BASE",
                            help="dump each path to BASE_<k>.bin/.json/.csv")
        if name == "couple":
            sp.add_argument("--y0", help="second start (default 0)")
            sp.add_argument("--v", help="comparison drift vector or 'auto'")
        if name == "verify":
            pass
        if name in ("bounds", "stationary"):
            sp.add_argument("--t", type=float, help="evaluation time")
        if name == "bounds":
            sp.add_argument("--a-used", dest="a_used", type=float,
                            help="Lyapunov scale for the constant cascade (>= 68)")
        if name == "stationary":
            sp.add_argument("--max-ks", dest="max_ks", type=float,
                            help="fail (exit 1) if any KS statistic exceeds this")
            sp.add_argument("--max-mean-err", dest="max_mean_err", type=float,
                            help="fail (exit 1) if any relative mean error exceeds this")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    fields = {f for f in RunConfig.__dataclass_fields__}
    kwargs = {k: v for k, v in vars(args).items() if k in fields}
    extra = {k: v for k, v in vars(args).items()
             if k not in fields and k != "command" and v is not None}
    return run(RunConfig(extra=extra, **kwargs))


if __name__ == "__main__":
    sys.exit(main())
