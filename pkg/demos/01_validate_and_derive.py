"""Build models three ways and check the standing assumptions.

A model is admissible when the reflection matrix has the completely-S form
R = I - P^T with P nonnegative, substochastic and transient (A1), the
effective drift b = -R^{-1} mu is strictly positive (A2), and the diffusion
covariance is positive definite (A3).  Everything downstream assumes all
three, so `validate_params` is the first call on any new model.
"""
import numpy as np

from rbmrate import catalog, model


def show(name: str, params: model.ModelParams) -> None:
    rep = model.validate_params(params)
    print(f"{name}: admissible={rep.admissible} "
          f"(substochastic={rep.a1_substochastic}, transient={rep.a1_transient}, "
          f"stable drift={rep.a2_stable}, pd covariance={rep.a3_pd}, "
          f"spectral radius={rep.spectral_radius:.4f})")
    for msg in rep.messages:
        print(f"    note: {msg}")
    if rep.admissible:
        dm = model.derive(params)
        print(f"    b = {np.array2string(dm.b, precision=4)}, "
              f"sigma = {np.array2string(dm.sigma, precision=4)}")


# 1. by hand: two independent reflected coordinates with drift -1
by_hand = model.ModelParams(d=2, mu=np.array([-1.0, -1.0]),
                            diff=np.eye(2), refl=np.eye(2))
show("hand-built identity model", by_hand)

# 2. from the rank-based catalog: gaps of the 3-particle system where only
#    the lowest particle drifts
gaps = catalog.rank_based_params(catalog.atlas_spec(3))
show("3-particle gap model", gaps)

# 3. a custom rank-based specification with per-rank volatilities chosen so
#    the squared volatilities grow linearly (keeps the product-form law)
spec = catalog.RankBasedSpec(deltas=(2.0, 1.0, 0.5, 0.0),
                             sigmas=(1.0, np.sqrt(2.0), np.sqrt(3.0), 2.0))
show("4-particle custom gaps", catalog.rank_based_params(spec))

# an inadmissible model for contrast: positive drift pushes mass to infinity
bad = model.ModelParams(d=1, mu=np.array([1.0]), diff=np.eye(1), refl=np.eye(1))
show("unstable drift", bad)
