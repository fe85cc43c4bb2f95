"""Parameter validation, derived quantities, norms, and JSON round trips."""
import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import identity_model, random_admissible, rank_model
from rbmrate import model


def test_weighted_norms_1d_oracle():
    # v x / sigma^2 = 2*3/4, x / sigma = 3/2, |x|_1 = 3
    dm = identity_model(1, sig=2.0)
    norms = model.weighted_norms(np.array([3.0]), np.array([2.0]), dm)
    assert norms.norm_inf_v == pytest.approx(1.5)
    assert norms.norm_inf_star == pytest.approx(1.5)
    assert norms.norm_l1 == pytest.approx(3.0)


def test_weighted_norms_picks_max_coordinate():
    dm = identity_model(3)
    x = np.array([0.5, 2.0, 1.0])
    v = np.array([1.0, 0.1, 3.0])
    norms = model.weighted_norms(x, v, dm)
    assert norms.norm_inf_v == pytest.approx(3.0)   # coord 3: 3*1/1
    assert norms.norm_inf_star == pytest.approx(2.0)
    assert norms.norm_l1 == pytest.approx(3.5)


def test_derive_rank2_oracle():
    dm = rank_model(3)
    assert dm.b == pytest.approx([4.0 / 3.0, 2.0 / 3.0])
    np.testing.assert_allclose(dm.r_inv, [[4.0 / 3.0, 2.0 / 3.0],
                                          [2.0 / 3.0, 4.0 / 3.0]])
    assert dm.sigma == pytest.approx([np.sqrt(2.0), np.sqrt(2.0)])
    np.testing.assert_allclose(dm.p_mat, [[0.0, 0.5], [0.5, 0.0]])
    np.testing.assert_allclose(dm.sigma_mat, dm.params.diff @ dm.params.diff.T,
                               atol=1e-12)


def test_spectral_radius_oracles():
    est, converged = model.spectral_radius(np.array([[0.5]]))
    assert converged and est == pytest.approx(0.5)
    # oscillating two-cycle matrix, eigenvalues +/- 0.5
    est, converged = model.spectral_radius(np.array([[0.0, 1.0], [0.25, 0.0]]))
    assert converged and est == pytest.approx(0.5, abs=1e-9)
    est, converged = model.spectral_radius(np.zeros((3, 3)))
    assert converged and est == pytest.approx(0.0, abs=1e-12)


def test_validate_admissible_rank_model():
    params = rank_model(4).params
    rep = model.validate_params(params)
    assert rep.admissible
    assert rep.a1_substochastic and rep.a1_transient and rep.a2_stable and rep.a3_pd
    assert rep.spectral_radius < 1.0
    assert rep.messages == []


def test_validate_flags_negative_p_entry():
    refl = np.array([[1.0, 0.2], [0.0, 1.0]])   # P = I - R^T has a negative entry
    params = model.ModelParams(d=2, mu=np.array([-1.0, -1.0]),
                               diff=np.eye(2), refl=refl)
    rep = model.validate_params(params)
    assert not rep.a1_substochastic
    assert not rep.admissible
    assert any("negative" in m or "substochastic" in m for m in rep.messages)


def test_validate_flags_unstable_drift():
    params = model.ModelParams(d=1, mu=np.array([1.0]), diff=np.eye(1),
                               refl=np.eye(1))
    rep = model.validate_params(params)
    assert not rep.a2_stable
    assert not rep.admissible


def test_validate_flags_degenerate_covariance():
    params = model.ModelParams(d=2, mu=np.array([-1.0, -1.0]),
                               diff=np.zeros((2, 2)), refl=np.eye(2))
    rep = model.validate_params(params)
    assert not rep.a3_pd
    assert not rep.admissible


def test_validate_survives_singular_reflection():
    refl = np.ones((2, 2))
    params = model.ModelParams(d=2, mu=np.array([-1.0, -1.0]),
                               diff=np.eye(2), refl=refl)
    rep = model.validate_params(params)    # must report, not raise
    assert not rep.admissible
    with pytest.raises(ValueError, match="refl"):
        model.derive(params)


def test_params_shape_checks():
    with pytest.raises(ValueError):
        model.ModelParams(d=2, mu=np.zeros(3), diff=np.eye(2), refl=np.eye(2))
    with pytest.raises(ValueError):
        model.ModelParams(d=2, mu=np.zeros(2), diff=np.eye(3), refl=np.eye(2))
    with pytest.raises(ValueError):
        model.ModelParams(d=1, mu=np.array([np.nan]), diff=np.eye(1),
                          refl=np.eye(1))


def test_params_arrays_frozen():
    params = identity_model(2).params
    with pytest.raises(ValueError):
        params.mu[0] = 5.0


def test_json_round_trip(tmp_path):
    params = rank_model(3).params
    path = tmp_path / "m.json"
    model.save_model(params, path)
    back = model.load_model(path)
    assert back.d == params.d
    np.testing.assert_array_equal(back.mu, params.mu)
    np.testing.assert_array_equal(back.diff, params.diff)
    np.testing.assert_array_equal(back.refl, params.refl)


def test_json_rejects_non_finite(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{"d": 1, "mu": [NaN], "D": [[1.0]], "R": [[1.0]]}')
    with pytest.raises(ValueError):
        model.load_model(path)


def test_model_dict_requires_keys():
    with pytest.raises(ValueError):
        model.model_from_dict({"d": 1, "mu": [0.0], "D": [[1.0]]})


@settings(max_examples=25, deadline=None)
@given(d=st.integers(min_value=1, max_value=8),
       seed=st.integers(min_value=0, max_value=10_000))
def test_random_admissible_models_validate(d, seed):
    dm = random_admissible(d, seed)
    rep = model.validate_params(dm.params)
    assert rep.admissible
    # derived pieces are mutually consistent
    np.testing.assert_allclose(dm.r_inv @ dm.params.refl, np.eye(d), atol=1e-9)
    np.testing.assert_allclose(dm.params.refl @ dm.b, -dm.params.mu, atol=1e-9)
    assert np.all(dm.b > 0)
