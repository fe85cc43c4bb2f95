"""Explicit convergence-rate constants for orthant-reflected Brownian motion.

Everything here is a closed-form function of the model triple (mu, D, R):
the contraction coefficient of the routing matrix P = I - R^T, the two
scale functionals a, b built from R^{-1} sigma, the cascade of universal
constants feeding the exponential rates, Wasserstein-distance decay bounds,
relaxation-time bounds, and the Lyapunov function used for hitting
estimates.  No simulation happens in this module.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import DerivedModel

__all__ = [
    "ThetaFunctionals",
    "CascadeConstants",
    "DecayProfile",
    "OptimalWeights",
    "WeightScales",
    "BoundValue",
    "BoundReport",
    "BcBound",
    "RankBound",
    "LyapunovEval",
    "SupBound",
    "contraction_coefficient",
    "decay_profile",
    "theta_functionals",
    "optimal_v",
    "lambda_phi",
    "constant_cascade",
    "default_cascade",
    "wasserstein_bound",
    "relaxation_time_bound",
    "bound_report",
    "bc_bound",
    "rank_bound",
    "lyapunov",
    "rbm_sup_bound",
]

A0 = 68.0  # smallest admissible Lyapunov scale; drift margin fails below it


@dataclass(frozen=True)
class ThetaFunctionals:
    a_theta: float
    b_theta: float
    n_r: int
    r1: float
    r2: float


@dataclass(frozen=True)
class CascadeConstants:
    a0: float
    d2: float
    a_used: float
    c1z: float
    c2z: float
    delta_p: float
    d1: float
    t0: float


@dataclass(frozen=True)
class DecayProfile:
    n_prime: float
    c_rd: float
    exact_decay: bool
    n_points: int


@dataclass(frozen=True)
class OptimalWeights:
    v: np.ndarray
    slack: float


@dataclass(frozen=True)
class WeightScales:
    lambda_v: float
    phi_v: float
    m_v: float
    t_v: float


@dataclass(frozen=True)
class BoundValue:
    value: float
    valid: bool
    terms: dict


@dataclass(frozen=True)
class BoundReport:
    functionals: ThetaFunctionals
    cascade: CascadeConstants
    v_tilde: np.ndarray
    lambda_v: float
    phi_v: float
    t_v: float
    m_v: float
    c1x: float
    c2x: float
    t_min: float
    t_rel_bound: float


@dataclass(frozen=True)
class BcBound:
    value: float
    valid: bool
    e_consts: tuple[float, float, float, float]
    t1: float
    n_prime: float
    t_rel_bound: float


@dataclass(frozen=True)
class RankBound:
    value: float
    valid: bool
    f_consts: tuple[float, float, float, float]
    t2: float
    sigma_cap: float
    a_star: float
    t_rel_bound: float


@dataclass(frozen=True)
class LyapunovEval:
    value: float
    gradient: np.ndarray
    drift: float


@dataclass(frozen=True)
class SupBound:
    value: float
    terms: dict
    start_range: tuple[float, float]


class ContractionError(RuntimeError):
    """Raised when ||P^n 1||_inf fails to reach 1/2 within the iteration cap."""

    def __init__(self, msg: str, norms: list[float]):
        super().__init__(msg)
        self.norms = norms


def contraction_coefficient(dm: DerivedModel, n_cap: int | None = None) -> int:
    """Smallest n >= 1 with ||P^n 1||_inf <= 1/2.

    Finite for every admissible model since P is transient.  The iteration
    cap defaults to 10 d^2 + 100; on failure the raised error carries the
    norm trajectory for diagnosis.
    """
    d = dm.d
    if n_cap is None:
        n_cap = 10 * d * d + 100
    w = np.ones(d)
    norms: list[float] = []
    for n in range(1, n_cap + 1):
        w = dm.p_mat @ w
        norm = float(np.max(w)) if d else 0.0
        norms.append(norm)
        if norm <= 0.5:
            return n
    raise ContractionError(
        f"||P^n 1||_inf stayed above 1/2 through n = {n_cap} "
        f"(last value {norms[-1]:.6g}); model is at best marginally transient",
        norms,
    )


def decay_profile(dm: DerivedModel, n_max: int | None = None) -> DecayProfile:
    """Geometric envelope ||P^n 1||_inf <= c_rd * 2^(-n / n_prime).

    Least-squares fit of log2 ||P^n 1||_inf against n over the window where
    the norm lies in (1e-12, 1); the intercept is then lifted so the
    envelope dominates every sampled point.  exact_decay marks a fit with
    negligible residual (pure geometric decay).
    """
    d = dm.d
    if n_max is None:
        n_max = 10 * d * d + 100
    w = np.ones(d)
    ns, logs = [], []
    for n in range(1, n_max + 1):
        w = dm.p_mat @ w
        norm = float(np.max(w))
        if norm <= 1e-12:
            break
        if norm < 1.0:
            ns.append(float(n))
            logs.append(math.log2(norm))
    if len(ns) < 2:
        raise ValueError(
            "decay window holds fewer than 2 points; cannot fit a profile "
            f"(collected {len(ns)} norms below 1 within n <= {n_max})")
    ns_arr = np.array(ns)
    logs_arr = np.array(logs)
    slope, intercept = np.polyfit(ns_arr, logs_arr, 1)
    if slope >= 0.0:
        raise ValueError(f"fitted decay slope {slope:.3g} is nonnegative; no geometric decay")
    resid = logs_arr - (intercept + slope * ns_arr)
    c_rd = float(2.0 ** (intercept + resid.max()))
    return DecayProfile(
        n_prime=float(-1.0 / slope),
        c_rd=c_rd,
        exact_decay=bool(np.max(np.abs(resid)) < 1e-9),
        n_points=len(ns),
    )


def theta_functionals(dm: DerivedModel, n_r: int | None = None,
                      n_cap: int | None = None) -> ThetaFunctionals:
    """Scale functionals a, b and the rate denominators R1, R2.

    a = max_i (R^{-1} sigma)_i / b_i, b = max_i (R^{-1} sigma)_i / sigma_i,
    R1 = n(R) (1 + a^2 log 2d), R2 = a^2 b.
    """
    if n_r is None:
        n_r = contraction_coefficient(dm, n_cap=n_cap)
    rs = dm.r_inv @ dm.sigma
    a = float(np.max(rs / dm.b))
    b = float(np.max(rs / dm.sigma))
    d = dm.d
    r1 = n_r * (1.0 + a * a * math.log(2 * d))
    r2 = a * a * b
    return ThetaFunctionals(a_theta=a, b_theta=b, n_r=int(n_r), r1=r1, r2=r2)


def optimal_v(tf: ThetaFunctionals, dm: DerivedModel) -> OptimalWeights:
    """Weight vector v~ = sigma / a minimizing the hitting-time scale T(v).

    Feasibility R^{-1} v~ <= b is rechecked numerically; it holds by the
    definition of a, so a violation past 1e-9 means corrupted inputs.
    """
    v = dm.sigma / tf.a_theta
    slack = float(np.min(dm.b - dm.r_inv @ v))
    if slack < -1e-9:
        raise ValueError(f"optimal weights infeasible: min(b - R^{{-1}} v) = {slack:.3g}")
    v = v.copy()
    v.flags.writeable = False
    return OptimalWeights(v=v, slack=slack)


def lambda_phi(v, sigma) -> WeightScales:
    """Rate scale Lambda(v) = min_i v_i^2/sigma_i^2, mass ratio
    phi(v) = 2 sum_i (v_i^2/sigma_i^2) / Lambda(v), and the derived
    M(v) = Lambda + log phi, T(v) = M / Lambda."""
    v = np.asarray(v, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    if v.shape != sigma.shape or v.ndim != 1:
        raise ValueError("v and sigma must be equal-length vectors")
    if np.any(v <= 0.0) or np.any(sigma <= 0.0):
        raise ValueError("v and sigma must be strictly positive")
    ratios = v * v / (sigma * sigma)
    lam = float(np.min(ratios))
    phi = float(2.0 * np.sum(ratios) / lam)
    m = lam + math.log(phi)
    return WeightScales(lambda_v=lam, phi_v=phi, m_v=m, t_v=m / lam)


def constant_cascade(a_used: float) -> CascadeConstants:
    """Universal-constant cascade seeded by the Lyapunov scale a_used >= A0.

    c1z and c2z size the small set and the hitting horizon, delta_p is the
    per-cycle regeneration probability, d1 the ell-1 rate numerator, t0 the
    burn-in multiplier.
    """
    if a_used < A0:
        raise ValueError(f"a_used = {a_used:.6g} below the minimal scale A0 = {A0:.6g}")
    c1z = max(2.0 * a_used, 8.0) + 1.0
    c2z = 2.0 + max(2.0 * c1z, 33.0)
    delta_p = min(1.0 / (2.0 * c2z), 1.0 / (64.0 * c1z))
    d1 = delta_p / 128.0
    t0 = 4.0 / delta_p
    return CascadeConstants(a0=A0, d2=max(A0, 9.0), a_used=float(a_used),
                            c1z=c1z, c2z=c2z, delta_p=delta_p, d1=d1, t0=t0)


def default_cascade(tf: ThetaFunctionals) -> CascadeConstants:
    """Cascade at the scale max(A0, D2 * b) actually required by the
    regeneration argument for this model.  Reports a_used so callers can
    see when it exceeds the universal floor A0."""
    d2 = max(A0, 9.0)
    return constant_cascade(max(A0, d2 * tf.b_theta))


def _c1_const(dm: DerivedModel, tf: ThetaFunctionals, x: np.ndarray,
              c_rd: float = 2.0) -> float:
    l1 = float(np.sum(np.abs(x)))
    return 2.0 * l1 + (tf.a_theta * c_rd / 2.0) * float(np.sum(dm.r_inv @ dm.sigma))


def _c2_const(dm: DerivedModel, tf: ThetaFunctionals, x: np.ndarray,
              kappa: float) -> float:
    d = dm.d
    l1 = float(np.sum(np.abs(x)))
    inf_star = float(np.max(np.asarray(x) / dm.sigma)) if d else 0.0
    expo = 3.0 * inf_star / (kappa * tf.a_theta * tf.b_theta)
    frob2 = float(np.sum(dm.r_inv ** 2))
    sig2 = float(np.sum(dm.sigma ** 2))
    return (2.0 * l1 * math.exp(expo)
            + tf.a_theta * math.sqrt(2.0 * d * (1.0 + d) * frob2 * sig2))


def wasserstein_bound(dm: DerivedModel, x, t: float,
                      tf: ThetaFunctionals | None = None,
                      cascade: CascadeConstants | None = None,
                      profile: DecayProfile | None = None) -> BoundValue:
    """Bound on the 1-Wasserstein distance between the law at time t started
    from x and the stationary law.

    value = C1 (2 exp(-d1 t / R1) + exp(-t / (16 d2 R2)))
            + C2 exp(-t / (8 d2 R2))

    and the bound is asserted only for t >= t0 (1 + a^2 log 2d) (the `valid`
    flag).  Passing a decay profile swaps (n(R), 2) for the fitted
    (n_prime, c_rd) in R1 and C1.
    """
    x = np.asarray(x, dtype=float)
    if tf is None:
        tf = theta_functionals(dm)
    if cascade is None:
        cascade = default_cascade(tf)
    d = dm.d
    if profile is None:
        r1 = tf.r1
        c1 = _c1_const(dm, tf, x)
    else:
        r1 = profile.n_prime * (1.0 + tf.a_theta ** 2 * math.log(2 * d))
        c1 = _c1_const(dm, tf, x, c_rd=profile.c_rd)
    c2 = _c2_const(dm, tf, x, cascade.d2)
    term1 = 2.0 * c1 * math.exp(-cascade.d1 * t / r1)
    term2 = c1 * math.exp(-t / (16.0 * cascade.d2 * tf.r2))
    term3 = c2 * math.exp(-t / (8.0 * cascade.d2 * tf.r2))
    t_min = cascade.t0 * (1.0 + tf.a_theta ** 2 * math.log(2 * d))
    return BoundValue(
        value=term1 + term2 + term3,
        valid=bool(t >= t_min),
        terms={"coupled": term1, "tail_c1": term2, "tail_c2": term3,
               "c1x": c1, "c2x": c2, "t_min": t_min},
    )


def relaxation_time_bound(dm: DerivedModel, x,
                          tf: ThetaFunctionals | None = None,
                          cascade: CascadeConstants | None = None,
                          profile: DecayProfile | None = None) -> float:
    """Upper bound on the first time the Wasserstein distance from x drops
    below 1/2, from inverting each term of the distance bound."""
    x = np.asarray(x, dtype=float)
    if tf is None:
        tf = theta_functionals(dm)
    if cascade is None:
        cascade = default_cascade(tf)
    d = dm.d
    if profile is None:
        r1 = tf.r1
        c1 = _c1_const(dm, tf, x)
    else:
        r1 = profile.n_prime * (1.0 + tf.a_theta ** 2 * math.log(2 * d))
        c1 = _c1_const(dm, tf, x, c_rd=profile.c_rd)
    c2 = _c2_const(dm, tf, x, cascade.d2)
    t_min = cascade.t0 * (1.0 + tf.a_theta ** 2 * math.log(2 * d))
    main = (r1 / cascade.d1 * math.log(8.0 * c1)
            + 16.0 * cascade.d2 * tf.r2 * math.log(4.0 * (c1 + c2)))
    return max(main, t_min)


def bound_report(dm: DerivedModel, x,
                 cascade: CascadeConstants | None = None,
                 n_cap: int | None = None) -> BoundReport:
    """One-call assembly of every start-dependent rate quantity."""
    x = np.asarray(x, dtype=float)
    tf = theta_functionals(dm, n_cap=n_cap)
    if cascade is None:
        cascade = default_cascade(tf)
    ow = optimal_v(tf, dm)
    ws = lambda_phi(ow.v, dm.sigma)
    c1 = _c1_const(dm, tf, x)
    c2 = _c2_const(dm, tf, x, cascade.d2)
    t_min = cascade.t0 * (1.0 + tf.a_theta ** 2 * math.log(2 * dm.d))
    t_rel = relaxation_time_bound(dm, x, tf=tf, cascade=cascade)
    return BoundReport(functionals=tf, cascade=cascade, v_tilde=ow.v,
                       lambda_v=ws.lambda_v, phi_v=ws.phi_v, t_v=ws.t_v,
                       m_v=ws.m_v, c1x=c1, c2x=c2, t_min=t_min,
                       t_rel_bound=t_rel)


def bc_bound(d: int, kappa: float, beta: float, delta: float, sigma_bar: float,
             x, t: float, cascade: CascadeConstants | None = None) -> BcBound:
    """Distance bound specialized to the uniform class

        ||1^T P^n||_inf <= kappa (1 - beta)^n,   R^{-1} mu <= -delta 1,
        1/sigma_bar <= sigma_i <= sigma_bar,

    with every constant explicit in (kappa, beta, delta, sigma_bar) and the
    dimension entering only through powers of d and log 2d."""
    x = np.asarray(x, dtype=float)
    if x.shape != (d,):
        raise ValueError(f"x must have shape ({d},)")
    if not (kappa >= 1.0 and 0.0 < beta <= 1.0 and delta > 0.0 and sigma_bar >= 1.0):
        raise ValueError("need kappa >= 1, beta in (0,1], delta > 0, sigma_bar >= 1")
    if cascade is None:
        cascade = constant_cascade(A0)
    n_prime = math.log(2.0) / math.log(1.0 / (1.0 - beta)) + 1.0 if beta < 1.0 else 1.0
    s2 = sigma_bar ** 2
    e1 = kappa ** 3 * s2 / (2.0 * beta ** 2 * delta)
    e2 = cascade.d1 / (n_prime * (2.0 + kappa ** 2 * s2 / (beta ** 2 * delta ** 2)))
    e3 = 2.0 * kappa ** 2 * s2 / (beta ** 2 * delta)
    e4 = beta ** 3 * delta ** 2 / (8.0 * cascade.d2 * kappa ** 3 * s2 ** 2)
    t1 = max(cascade.t0 * (1.0 + kappa ** 2 * s2 / (beta ** 2 * delta ** 2)),
             48.0 * kappa * s2 / (beta * delta))
    l1 = float(np.sum(np.abs(x)))
    linf = float(np.max(np.abs(x))) if d else 0.0
    log2d = math.log(2 * d)
    value = (2.0 * (2.0 * l1 + e1 * d * d) * math.exp(-e2 * t / log2d)
             + (4.0 * l1 + e1 * d * d) * math.exp(-e4 * t / 2.0)
             + e3 * d * d * math.exp(-e4 * t))
    t_floor = t1 * max(linf, log2d)
    t_rel = max(
        math.log(8.0 * (2.0 * l1 + e1 * d * d)) * log2d / e2
        + (2.0 * math.log(8.0 * (4.0 * l1 + e1 * d * d))
           + math.log(8.0 * e3 * d * d)) / e4,
        t_floor,
    )
    return BcBound(value=value, valid=bool(t >= t_floor),
                   e_consts=(e1, e2, e3, e4), t1=t1, n_prime=n_prime,
                   t_rel_bound=t_rel)


def rank_bound(sigmas, a_star: float, y, t: float,
               cascade: CascadeConstants | None = None) -> RankBound:
    """Distance bound for the gap process of rank-driven diffusions.

    sigmas are the d+1 particle volatilities, a_star the stability scale
    max_k k (d+1-k) / b_k, y the starting gap vector.  sigma_cap collects
    max(sigma_i, 1/sigma_i) so the bound degrades symmetrically for very
    large or very small volatilities."""
    sigmas = np.asarray(sigmas, dtype=float)
    y = np.asarray(y, dtype=float)
    d = y.shape[0]
    if sigmas.shape != (d + 1,):
        raise ValueError(f"need d+1 = {d + 1} particle volatilities, got {sigmas.shape}")
    if np.any(sigmas <= 0.0) or a_star <= 0.0:
        raise ValueError("sigmas and a_star must be strictly positive")
    if cascade is None:
        cascade = constant_cascade(A0)
    s_cap = float(max(np.max(sigmas), np.max(1.0 / sigmas)))
    s2 = s_cap ** 2
    f1 = 1.0
    f2 = cascade.d1 / 2.0
    f3 = 4.0
    f4 = 1.0 / (2.0 * cascade.d2)
    t2 = max(cascade.t0, 48.0)
    log2d = math.log(2 * d)
    l1 = float(np.sum(np.abs(y)))
    linf = float(np.max(np.abs(y))) if d else 0.0
    bulk = f1 * s2 * a_star * d ** 3
    rate1 = d * d * (1.0 + s2 * a_star ** 2 * log2d)
    rate2 = s2 ** 2 * a_star ** 2 * (d + 1.0) ** 2
    value = (2.0 * (2.0 * l1 + bulk) * math.exp(-f2 * t / rate1)
             + (4.0 * l1 + bulk) * math.exp(-f4 * t / (2.0 * rate2))
             + f3 * s2 * a_star * d ** 3.5 * math.exp(-f4 * t / rate2))
    t_floor = t2 * max(s2 * a_star * linf, 1.0 + s2 * a_star ** 2 * log2d)
    t_rel = max(
        rate1 * math.log(8.0 * (2.0 * l1 + bulk)) / f2
        + rate2 * (2.0 * math.log(8.0 * (4.0 * l1 + bulk))
                   + math.log(8.0 * f3 * s2 * a_star * d ** 3.5)) / f4,
        t_floor,
    )
    return RankBound(value=value, valid=bool(t >= t_floor),
                     f_consts=(f1, f2, f3, f4), t2=t2, sigma_cap=s_cap,
                     a_star=float(a_star), t_rel_bound=t_rel)


_LOG2 = math.log(2.0)


def _g_parts(u: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """The C^2 ramp g and its first two derivatives.

    g(u) = u for u >= log 2; below, a quartic spline log2 * h(u / log2)
    with h(s) = s^4 - 3 s^3 + 3 s^2, matching value and slope at log 2
    with vanishing curvature there."""
    u = np.asarray(u, dtype=float)
    s = u / _LOG2
    low = u < _LOG2
    g = np.where(low, _LOG2 * (s ** 4 - 3.0 * s ** 3 + 3.0 * s ** 2), u)
    g1 = np.where(low, 4.0 * s ** 3 - 9.0 * s ** 2 + 6.0 * s, 1.0)
    g2 = np.where(low, (12.0 * s ** 2 - 18.0 * s + 6.0) / _LOG2, 0.0)
    return g, g1, g2


def lyapunov(y, v, dm: DerivedModel, a_used: float = A0) -> LyapunovEval:
    """Soft-max Lyapunov function for the normally reflected comparison
    process with drift -v:

        V(y) = log sum_i exp(g(2 v_i y_i / (a_used sigma_i^2)))

    Returns V, its gradient, and the full drift expression
    -v . grad V + (1/2) tr(Sigma Hess V) + (1/2) grad V . Sigma grad V,
    which is <= -Lambda(v) / (2 a_used) outside the compact set
    {max_i v_i y_i / sigma_i^2 <= a_used log phi(v)} once a_used >= A0."""
    y = np.asarray(y, dtype=float)
    v = np.asarray(v, dtype=float)
    if y.shape != (dm.d,) or v.shape != (dm.d,):
        raise ValueError("y and v must be d-vectors matching the model dimension")
    if np.any(v <= 0.0):
        raise ValueError("weights v must be strictly positive")
    if a_used <= 0.0:
        raise ValueError("a_used must be positive")
    c = 2.0 * v / (a_used * dm.sigma ** 2)
    u = c * y
    g, g1, g2 = _g_parts(u)
    top = float(np.max(g))
    w = np.exp(g - top)
    w /= w.sum()
    value = top + math.log(float(np.sum(np.exp(g - top))))
    grad = w * g1 * c
    # Hessian: diag(w c^2 (g1^2 + g2)) - outer(w c g1, w c g1)
    diag = w * c * c * (g1 * g1 + g2)
    outer_vec = w * c * g1
    sig = dm.sigma_mat
    trace_term = float(np.sum(np.diag(sig) * diag) - outer_vec @ sig @ outer_vec)
    drift = float(-v @ grad + 0.5 * trace_term + 0.5 * grad @ sig @ grad)
    grad = grad.copy()
    grad.flags.writeable = False
    return LyapunovEval(value=float(value), gradient=grad, drift=drift)


def rbm_sup_bound(mu_drift: float, sigma_diff: float, level: float,
                  horizon: float) -> SupBound:
    """Tail bound for a one-dimensional reflected Brownian motion with
    drift -mu_drift and diffusion sigma_diff started in [0, level / 2]:

        P(sup_{[0, horizon]} X >= level)
          <= exp(-mu^2 T / (2 sigma^2))
             + (4 mu T / level + 2) exp(-level mu / sigma^2).
    """
    if min(mu_drift, sigma_diff, level, horizon) <= 0.0:
        raise ValueError("mu_drift, sigma_diff, level, horizon must be positive")
    s2 = sigma_diff ** 2
    term_drift = math.exp(-mu_drift ** 2 * horizon / (2.0 * s2))
    term_exc = (4.0 * mu_drift * horizon / level + 2.0) * math.exp(-level * mu_drift / s2)
    return SupBound(value=term_drift + term_exc,
                    terms={"drift_window": term_drift, "excursion": term_exc},
                    start_range=(0.0, level / 2.0))
