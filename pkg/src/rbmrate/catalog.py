"""Model catalog for rank-driven particle systems.

The spacing (gap) vector between consecutive order statistics of n = d + 1
particles, where particle in rank k gets drift delta_k and volatility
sigma_k, is an orthant-reflected Brownian motion with a tridiagonal
covariance and a reflection matrix whose routing part P puts 1/2 on both
off-diagonals.  This module builds those instances, their stability
vectors, and the product-exponential stationary law available under the
skew symmetry condition on the volatilities.
"""
from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass

import numpy as np

from .model import ModelParams

__all__ = [
    "RankBasedSpec",
    "StabilityB",
    "StationaryLaw",
    "BcClassCheck",
    "rank_based_params",
    "atlas_spec",
    "stability_b",
    "stationary_gap_law",
    "bc_class_check",
    "rank_spec_from_dict",
    "rank_spec_to_dict",
    "parse_rank_spec",
]


@dataclass(frozen=True)
class RankBasedSpec:
    """Rank-indexed drifts and volatilities for n = d + 1 particles."""

    deltas: np.ndarray
    sigmas: np.ndarray

    def __post_init__(self):
        deltas = np.asarray(self.deltas, dtype=float)
        sigmas = np.asarray(self.sigmas, dtype=float)
        if deltas.ndim != 1 or deltas.shape != sigmas.shape or deltas.shape[0] < 2:
            raise ValueError("deltas and sigmas must be equal-length vectors, length >= 2")
        if not (np.all(np.isfinite(deltas)) and np.all(np.isfinite(sigmas))):
            raise ValueError("deltas and sigmas must be finite")
        if np.any(sigmas <= 0.0):
            raise ValueError("sigmas must be strictly positive")
        deltas = deltas.copy()
        sigmas = sigmas.copy()
        deltas.flags.writeable = False
        sigmas.flags.writeable = False
        object.__setattr__(self, "deltas", deltas)
        object.__setattr__(self, "sigmas", sigmas)

    @property
    def n_particles(self) -> int:
        return self.deltas.shape[0]

    @property
    def d(self) -> int:
        return self.deltas.shape[0] - 1


@dataclass(frozen=True)
class StabilityB:
    """Both stability-vector conventions for a rank-based gap model.

    b_atlas[k] = sum_{i <= k} (delta_i - mean delta) is the averaged-drift
    form; b_sde = -R^{-1} mu is the one the reflected SDE sees.  They agree
    up to the exact factor b_sde = 2 b_atlas.  a_star = max_k k (d+1-k) /
    b_atlas[k] is the scale entering the rank-based rate bound.
    """

    b_atlas: np.ndarray
    b_sde: np.ndarray
    a_star: float


@dataclass(frozen=True)
class StationaryLaw:
    """Product law: gap k is exponential with the given rate."""

    rates: np.ndarray
    skew_ok: bool

    @property
    def means(self) -> np.ndarray:
        return 1.0 / self.rates


@dataclass(frozen=True)
class BcClassCheck:
    bc1_ok: bool
    max_ratio: float
    delta: float
    sigma_bar: float
    kappa_fit: float
    beta_fit: float


def atlas_spec(n: int) -> RankBasedSpec:
    """The classic n-particle instance: unit drift on the lowest rank only,
    unit volatilities everywhere."""
    if n < 2:
        raise ValueError("need at least 2 particles")
    deltas = np.zeros(n)
    deltas[0] = 1.0
    return RankBasedSpec(deltas=deltas, sigmas=np.ones(n))


def rank_based_params(spec: RankBasedSpec) -> ModelParams:
    """Gap-process model triple (mu, D, R) for the given rank coefficients.

    mu_k = delta_{k+1} - delta_k; Sigma is tridiagonal with diagonal
    sigma_k^2 + sigma_{k+1}^2 and off-diagonals -sigma_{k+1}^2; D is the
    symmetric PSD square root of Sigma; R = I - P^T with P carrying 1/2 on
    both off-diagonals.
    """
    d = spec.d
    delta = spec.deltas
    sig = spec.sigmas
    mu = delta[1:] - delta[:-1]
    sigma_mat = np.zeros((d, d))
    for k in range(d):
        sigma_mat[k, k] = sig[k] ** 2 + sig[k + 1] ** 2
        if k + 1 < d:
            sigma_mat[k, k + 1] = -sig[k + 1] ** 2
            sigma_mat[k + 1, k] = -sig[k + 1] ** 2
    evals, evecs = np.linalg.eigh(sigma_mat)
    if np.any(evals <= 0.0):
        raise ValueError("gap covariance lost positive definiteness")
    diff = (evecs * np.sqrt(evals)) @ evecs.T
    p_mat = np.zeros((d, d))
    for k in range(d - 1):
        p_mat[k, k + 1] = 0.5
        p_mat[k + 1, k] = 0.5
    refl = np.eye(d) - p_mat.T
    return ModelParams(d=d, mu=mu, diff=diff, refl=refl)


def stability_b(spec: RankBasedSpec) -> StabilityB:
    """Stability vectors in both conventions; raises unless all gaps are
    positive recurrent (every partial sum of centered drifts positive)."""
    delta = spec.deltas
    d = spec.d
    b_atlas = np.cumsum(delta - delta.mean())[:-1]
    params = rank_based_params(spec)
    b_sde = np.linalg.solve(params.refl, -params.mu)
    if not np.allclose(b_sde, 2.0 * b_atlas, atol=1e-10, rtol=1e-10):
        raise AssertionError(
            "stability vectors disagree beyond tolerance: "
            f"b_sde = {b_sde}, 2 b_atlas = {2.0 * b_atlas}")
    if np.any(b_atlas <= 0.0):
        raise ValueError(
            f"gap model is not stable: centered drift partial sums {b_atlas} "
            "must all be positive")
    ks = np.arange(1, d + 1, dtype=float)
    a_star = float(np.max(ks * (d + 1 - ks) / b_atlas))
    b_atlas = b_atlas.copy()
    b_atlas.flags.writeable = False
    b_sde = b_sde.copy()
    b_sde.flags.writeable = False
    return StabilityB(b_atlas=b_atlas, b_sde=b_sde, a_star=a_star)


def stationary_gap_law(spec: RankBasedSpec, tol: float = 1e-12) -> StationaryLaw:
    """Product-exponential stationary law of the gap process.

    Exists only under the skew symmetry condition: sigma_{k+1}^2 - sigma_k^2
    constant in k.  Gap k is then exponential with rate
    2 b_sde[k] / (sigma_k^2 + sigma_{k+1}^2).
    """
    sig2 = spec.sigmas ** 2
    jumps = np.diff(sig2)
    scale = max(float(np.max(sig2)), 1.0)
    if jumps.size and float(np.max(np.abs(jumps - jumps[0]))) > tol * scale:
        raise ValueError(
            "no product-form stationary law available: volatility increments "
            f"sigma_(k+1)^2 - sigma_k^2 = {jumps} are not constant")
    sb = stability_b(spec)
    denom = sig2[:-1] + sig2[1:]
    rates = 2.0 * sb.b_sde / denom
    rates.flags.writeable = False
    return StationaryLaw(rates=rates, skew_ok=True)


def bc_class_check(p_mat: np.ndarray, b: np.ndarray, sigma: np.ndarray,
                   kappa: float | None = None, beta: float | None = None,
                   n_check: int = 200) -> BcClassCheck:
    """Membership check for the uniform parameter class.

    Verifies ||1^T P^n||_inf <= kappa (1-beta)^n for n <= n_check when a
    pair (kappa, beta) is supplied, and always reports a fitted minimal
    pair (beta from the spectral radius, kappa as the worst-case ratio).
    delta is the stability margin min b, sigma_bar the two-sided
    volatility envelope max(max sigma, max 1/sigma).
    """
    p_mat = np.asarray(p_mat, dtype=float)
    b = np.asarray(b, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    if np.any(b <= 0.0):
        raise ValueError("stability vector b must be strictly positive")
    delta = float(np.min(b))
    sigma_bar = float(max(np.max(sigma), np.max(1.0 / sigma)))

    # column-sum norms of P^n via w <- P^T w from the all-ones vector
    w = np.ones(p_mat.shape[0])
    norms = [1.0]
    for _ in range(n_check):
        w = p_mat.T @ w
        norms.append(float(np.max(w)) if w.size else 0.0)

    from .model import spectral_radius

    rho, _ = spectral_radius(p_mat)
    beta_fit = 1.0 - rho
    kappa_fit = 1.0
    for n, norm in enumerate(norms):
        if norm <= 0.0:
            continue
        geo = (1.0 - beta_fit) ** n
        if geo <= 0.0:
            continue
        kappa_fit = max(kappa_fit, norm / geo)

    if kappa is not None and beta is not None:
        ratios = [norm / (kappa * (1.0 - beta) ** n) if norm > 0.0 else 0.0
                  for n, norm in enumerate(norms)]
        max_ratio = float(max(ratios))
        bc1_ok = max_ratio <= 1.0 + 1e-12
    else:
        max_ratio = 1.0
        bc1_ok = True
    return BcClassCheck(bc1_ok=bc1_ok, max_ratio=max_ratio, delta=delta,
                        sigma_bar=sigma_bar, kappa_fit=float(kappa_fit),
                        beta_fit=float(beta_fit))


# ---------------------------------------------------------------------------
# rank spec file format: JSON object {deltas, sigmas}; shorthand "atlas:<n>"

def rank_spec_from_dict(obj: dict) -> RankBasedSpec:
    try:
        return RankBasedSpec(deltas=obj["deltas"], sigmas=obj["sigmas"])
    except (KeyError, TypeError) as exc:
        raise ValueError(f"rank spec object must carry keys deltas, sigmas: {exc}") from exc


def rank_spec_to_dict(spec: RankBasedSpec) -> dict:
    return {"deltas": spec.deltas.tolist(), "sigmas": spec.sigmas.tolist()}


def parse_rank_spec(source: str) -> RankBasedSpec:
    """Accepts the literal shorthand atlas:<n> or a path to a JSON file."""
    m = re.fullmatch(r"atlas:(\d+)", source.strip())
    if m:
        return atlas_spec(int(m.group(1)))
    with open(source, "r", encoding="utf-8") as fh:
        obj = json.load(fh, parse_constant=lambda name: (_ for _ in ()).throw(
            ValueError(f"non-finite JSON token {name!r} not allowed")))
    return rank_spec_from_dict(obj)
