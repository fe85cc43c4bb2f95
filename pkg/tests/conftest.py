"""Shared model builders for the test suite."""
import numpy as np

from rbmrate import catalog, model


def rank_model(n_particles: int) -> model.DerivedModel:
    """Gap process of the rank-based model with only the lowest particle
    drifting; gap dimension is n_particles - 1."""
    return model.derive(catalog.rank_based_params(catalog.atlas_spec(n_particles)))


def identity_model(d: int, drift: float = 1.0, sig: float = 1.0) -> model.DerivedModel:
    """Independent coordinates: R = I, drift -drift, diffusion sig per axis."""
    params = model.ModelParams(d=d, mu=np.full(d, -drift),
                               diff=sig * np.eye(d), refl=np.eye(d))
    return model.derive(params)


def random_admissible(d: int, seed: int) -> model.DerivedModel:
    """Random model satisfying all three standing assumptions: P >= 0 scaled
    to spectral radius < 1, b > 0 chosen first so the drift is stable by
    construction, covariance from a full-rank factor."""
    rng = np.random.default_rng(seed)
    p = rng.uniform(0.0, 1.0, (d, d))
    np.fill_diagonal(p, 0.0)
    if d > 1:
        p *= rng.uniform(0.4, 0.9) / p.sum(axis=1).max()
    else:
        p[:] = 0.0
    refl = np.eye(d) - p.T
    b = rng.uniform(0.5, 2.0, d)
    mu = -refl @ b
    a = rng.normal(size=(d, d))
    diff = np.linalg.cholesky(a @ a.T + 0.1 * np.eye(d))
    return model.derive(model.ModelParams(d=d, mu=mu, diff=diff, refl=refl))


def random_substochastic(d: int, seed: int, scale: float = 0.9) -> np.ndarray:
    """Nonnegative matrix with row sums <= scale < 1."""
    rng = np.random.default_rng(seed)
    p = rng.uniform(0.0, 1.0, (d, d))
    row = p.sum(axis=1).max()
    return p * (scale / row) if row > 0 else p
