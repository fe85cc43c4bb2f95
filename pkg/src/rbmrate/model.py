"""Model definition, validation, and derived quantities for orthant-reflected Brownian motion.

An instance is the triple (mu, D, R) in dimension d.  The process

    X(t) = x + D B(t) + mu t + R L(t)

lives in the nonnegative orthant; B is a standard d-dimensional Brownian
motion and L is the minimal nondecreasing pushing process that keeps
X >= 0, with L_i increasing only while X_i = 0.  Admissibility:

  (A1) P = I - R^T is substochastic (entries >= 0, row sums <= 1) and
       transient (spectral radius strictly below 1),
  (A2) b = -R^{-1} mu > 0 componentwise,
  (A3) Sigma = D D^T is positive definite.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ModelParams",
    "DerivedModel",
    "ValidationReport",
    "WeightedNorms",
    "validate_params",
    "derive",
    "weighted_norms",
    "spectral_radius",
    "model_from_dict",
    "model_to_dict",
    "load_model",
    "save_model",
]


def _as_matrix(m, d: int, name: str) -> np.ndarray:
    arr = np.asarray(m, dtype=float)
    if arr.shape != (d, d):
        raise ValueError(f"{name} must be {d}x{d}, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    arr = arr.copy()
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class ModelParams:
    """The defining triple: drift mu, diffusion factor D, reflection matrix R.

    Columns of refl are the pushing directions on the corresponding faces.
    """

    d: int
    mu: np.ndarray
    diff: np.ndarray
    refl: np.ndarray

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("dimension d must be >= 1")
        mu = np.asarray(self.mu, dtype=float)
        if mu.shape != (self.d,):
            raise ValueError(f"mu must have shape ({self.d},), got {mu.shape}")
        if not np.all(np.isfinite(mu)):
            raise ValueError("mu contains non-finite entries")
        mu = mu.copy()
        mu.flags.writeable = False
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "diff", _as_matrix(self.diff, self.d, "diff"))
        object.__setattr__(self, "refl", _as_matrix(self.refl, self.d, "refl"))


@dataclass(frozen=True)
class DerivedModel:
    """Cached derived quantities of an admissible instance."""

    params: ModelParams
    sigma_mat: np.ndarray  # Sigma = D D^T
    p_mat: np.ndarray      # P = I - R^T
    r_inv: np.ndarray
    b: np.ndarray          # -R^{-1} mu
    sigma: np.ndarray      # sqrt(diag Sigma)

    @property
    def d(self) -> int:
        return self.params.d


@dataclass(frozen=True)
class ValidationReport:
    a1_substochastic: bool
    a1_transient: bool
    a2_stable: bool
    a3_pd: bool
    spectral_radius: float
    messages: list[str] = field(default_factory=list)

    @property
    def admissible(self) -> bool:
        return (self.a1_substochastic and self.a1_transient
                and self.a2_stable and self.a3_pd)


@dataclass(frozen=True)
class WeightedNorms:
    norm_inf_v: float
    norm_inf_star: float
    norm_l1: float


def spectral_radius(p_mat: np.ndarray, tol: float = 1e-12,
                    max_iter: int = 10_000) -> tuple[float, bool]:
    """Spectral radius of a nonnegative matrix by power iteration.

    Iterates on P + I so the dominant eigenvalue is simple enough for the
    max Collatz ratio to settle even when P has several eigenvalues on its
    spectral circle.  Returns (estimate, converged).
    """
    p = np.asarray(p_mat, dtype=float)
    d = p.shape[0]
    w = np.ones(d)
    est = 1.0
    for _ in range(max_iter):
        u = p @ w + w
        est = float(np.max(u / w))
        top = float(np.max(u))
        if top <= 0.0:
            return 0.0, True
        w_new = u / top
        # guard against a coordinate collapsing to 0 (reducible P)
        np.clip(w_new, 1e-300, None, out=w_new)
        # converge on the iterate, not the ratio: the max ratio can sit on
        # a plateau for ~d steps while boundary mass diffuses inward
        if float(np.max(np.abs(w_new - w))) <= tol:
            return est - 1.0, True
        w = w_new
    return est - 1.0, False


def validate_params(p: ModelParams) -> ValidationReport:
    """Check admissibility assumptions (A1)-(A3); never aborts on a singular R."""
    msgs: list[str] = []
    d = p.d
    p_mat = np.eye(d) - p.refl.T

    nonneg = bool(np.all(p_mat >= -1e-12))
    row_ok = bool(np.all(p_mat.sum(axis=1) <= 1.0 + 1e-12))
    a1_sub = nonneg and row_ok
    if not nonneg:
        msgs.append("P = I - R^T has negative entries")
    if not row_ok:
        msgs.append("P = I - R^T has a row sum above 1")

    rho, converged = spectral_radius(np.abs(p_mat))
    a1_trans = bool(rho < 1.0) and converged
    if not converged:
        msgs.append("power iteration for the spectral radius did not converge")
    if rho >= 1.0:
        msgs.append(f"spectral radius of P is {rho:.6g} >= 1")

    a2 = False
    try:
        b = np.linalg.solve(p.refl, -p.mu)
        a2 = bool(np.all(b > 0.0))
        if not a2:
            msgs.append("b = -R^{-1} mu has a nonpositive coordinate")
    except np.linalg.LinAlgError:
        msgs.append("R is singular; stability vector b undefined")

    sigma_mat = p.diff @ p.diff.T
    a3 = _cholesky_ok(sigma_mat, 1e-12)
    if not a3:
        msgs.append("Sigma = D D^T is not positive definite at pivot threshold 1e-12")

    return ValidationReport(a1_sub, a1_trans, a2, a3, rho, msgs)


def _cholesky_ok(s_mat: np.ndarray, pivot_tol: float) -> bool:
    """Constructive positive-definiteness test: symmetric factorization attempt
    that fails when any pivot drops below pivot_tol * max diagonal."""
    a = np.array(s_mat, dtype=float)
    d = a.shape[0]
    if not np.allclose(a, a.T, atol=1e-10):
        return False
    floor = pivot_tol * max(float(a.diagonal().max(initial=0.0)), 0.0)
    low = np.zeros_like(a)
    for j in range(d):
        pivot = a[j, j] - low[j, :j] @ low[j, :j]
        if pivot <= floor or not math.isfinite(pivot):
            return False
        low[j, j] = math.sqrt(pivot)
        if j + 1 < d:
            low[j + 1:, j] = (a[j + 1:, j] - low[j + 1:, :j] @ low[j, :j]) / low[j, j]
    return True


def derive(p: ModelParams) -> DerivedModel:
    """Populate all derived quantities.  Requires A1a and A3 to hold."""
    d = p.d
    cond = np.linalg.cond(p.refl)
    if not np.isfinite(cond) or cond > 1e14:
        raise ValueError(f"reflection matrix R is numerically singular (cond ~ {cond:.3g})")
    sigma_mat = p.diff @ p.diff.T
    p_mat = np.eye(d) - p.refl.T
    r_inv = np.linalg.solve(p.refl, np.eye(d))
    b = np.linalg.solve(p.refl, -p.mu)
    sigma = np.sqrt(np.diag(sigma_mat))
    for arr in (sigma_mat, p_mat, r_inv, b, sigma):
        arr.flags.writeable = False
    return DerivedModel(params=p, sigma_mat=sigma_mat, p_mat=p_mat,
                        r_inv=r_inv, b=b, sigma=sigma)


def weighted_norms(x, v, dm: DerivedModel) -> WeightedNorms:
    """The three norms used by the rate machinery.

    norm_inf_v   = max_i v_i x_i / sigma_i^2   (weighted supremum norm)
    norm_inf_star= max_i x_i / sigma_i
    norm_l1      = sum_i |x_i|
    """
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    if x.shape != (dm.d,) or v.shape != (dm.d,):
        raise ValueError("x and v must be d-vectors matching the model dimension")
    if np.any(v <= 0.0):
        raise ValueError("weights v must be strictly positive")
    s = dm.sigma
    return WeightedNorms(
        norm_inf_v=float(np.max(v * x / s**2)),
        norm_inf_star=float(np.max(x / s)),
        norm_l1=float(np.sum(np.abs(x))),
    )


# ---------------------------------------------------------------------------
# model file format: JSON object with keys d, mu, D, R; NaN/Inf rejected

def model_from_dict(obj: dict) -> ModelParams:
    try:
        d = int(obj["d"])
        mu = obj["mu"]
        diff = obj["D"]
        refl = obj["R"]
    except (KeyError, TypeError) as exc:
        raise ValueError(f"model object must carry keys d, mu, D, R: {exc}") from exc
    return ModelParams(d=d, mu=mu, diff=diff, refl=refl)


def model_to_dict(p: ModelParams) -> dict:
    return {"d": p.d, "mu": p.mu.tolist(), "D": p.diff.tolist(), "R": p.refl.tolist()}


def _reject_constant(name: str):
    raise ValueError(f"non-finite JSON token {name!r} not allowed in model files")


def load_model(path) -> ModelParams:
    with open(path, "r", encoding="utf-8") as fh:
        obj = json.load(fh, parse_constant=_reject_constant)
    return model_from_dict(obj)


def save_model(p: ModelParams, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_dict(p), fh, indent=2)
        fh.write("\n")
