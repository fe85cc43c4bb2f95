"""Rank-based gap models: parameters, stability, stationary laws, class checks."""
import math

import numpy as np
import pytest

from conftest import identity_model, rank_model
from rbmrate import catalog, model


def test_atlas_spec_shape():
    spec = catalog.atlas_spec(5)
    np.testing.assert_array_equal(spec.deltas, [1.0, 0.0, 0.0, 0.0, 0.0])
    np.testing.assert_array_equal(spec.sigmas, np.ones(5))
    assert spec.n_particles == 5
    assert spec.d == 4


def test_spec_validation():
    with pytest.raises(ValueError):
        catalog.RankBasedSpec(deltas=np.array([1.0]), sigmas=np.array([1.0]))
    with pytest.raises(ValueError):
        catalog.RankBasedSpec(deltas=np.array([1.0, 0.0]),
                              sigmas=np.array([1.0, -1.0]))
    with pytest.raises(ValueError):
        catalog.RankBasedSpec(deltas=np.array([np.inf, 0.0]),
                              sigmas=np.array([1.0, 1.0]))


def test_rank_based_params_atlas3_oracle():
    params = catalog.rank_based_params(catalog.atlas_spec(3))
    np.testing.assert_allclose(params.mu, [-1.0, 0.0])
    np.testing.assert_allclose(params.refl, [[1.0, -0.5], [-0.5, 1.0]])
    np.testing.assert_allclose(params.diff @ params.diff.T,
                               [[2.0, -1.0], [-1.0, 2.0]], atol=1e-12)
    # the factor itself is symmetric PSD (principal square root)
    np.testing.assert_allclose(params.diff, params.diff.T, atol=1e-12)


def test_rank_based_params_tridiagonal_structure():
    spec = catalog.RankBasedSpec(deltas=np.array([2.0, 1.0, 0.5, 0.0]),
                                 sigmas=np.array([1.0, 2.0, 1.5, 1.0]))
    params = catalog.rank_based_params(spec)
    # drift of gap k is delta_{k+1} - delta_k
    np.testing.assert_allclose(params.mu, [-1.0, -0.5, -0.5])
    cov = params.diff @ params.diff.T
    np.testing.assert_allclose(np.diag(cov), [5.0, 6.25, 3.25], atol=1e-12)
    np.testing.assert_allclose(np.diag(cov, 1), [-4.0, -2.25], atol=1e-12)
    assert cov[0, 2] == pytest.approx(0.0, abs=1e-12)


def test_stability_doubling_identity():
    for n in (2, 3, 5, 8):
        st = catalog.stability_b(catalog.atlas_spec(n))
        np.testing.assert_allclose(st.b_sde, 2.0 * st.b_atlas, rtol=1e-12)
        assert np.all(st.b_sde > 0)


def test_stability_atlas3_oracle():
    st = catalog.stability_b(catalog.atlas_spec(3))
    np.testing.assert_allclose(st.b_sde, [4.0 / 3.0, 2.0 / 3.0])
    np.testing.assert_allclose(st.b_atlas, [2.0 / 3.0, 1.0 / 3.0])
    assert st.a_star == pytest.approx(6.0)


def test_stability_a_star_uniform_closed_form():
    # uniform diffusivities: a* = max_k k(d+1-k) / b_atlas_k; Atlas gives d(d+1)
    for n in (2, 3, 4, 6):
        st = catalog.stability_b(catalog.atlas_spec(n))
        d = n - 1
        assert st.a_star == pytest.approx(d * (d + 1.0))


def test_stability_rejects_unstable_profile():
    spec = catalog.RankBasedSpec(deltas=np.array([0.0, 0.0, 1.0]),
                                 sigmas=np.ones(3))
    with pytest.raises(ValueError):
        catalog.stability_b(spec)


def test_r_inv_closed_form_rank_models():
    # (R^{-1})_ij = 2 min(i,j) (d+1-max(i,j)) / (d+1), 1-indexed
    for d in range(1, 7):
        dm = rank_model(d + 1)
        i = np.arange(1, d + 1)
        expected = (2.0 * np.minimum.outer(i, i)
                    * (d + 1 - np.maximum.outer(i, i)) / (d + 1))
        np.testing.assert_allclose(dm.r_inv, expected, atol=1e-10)


def test_stationary_gap_law_oracles():
    law2 = catalog.stationary_gap_law(catalog.atlas_spec(2))
    np.testing.assert_allclose(law2.rates, [1.0])
    law3 = catalog.stationary_gap_law(catalog.atlas_spec(3))
    np.testing.assert_allclose(law3.rates, [4.0 / 3.0, 2.0 / 3.0])
    np.testing.assert_allclose(law3.means, [0.75, 1.5])
    assert law2.skew_ok and law3.skew_ok


def test_stationary_gap_law_arithmetic_variances():
    # squared diffusivities in arithmetic progression keep the product form
    spec = catalog.RankBasedSpec(deltas=np.array([1.0, 0.0, 0.0]),
                                 sigmas=np.sqrt(np.array([1.0, 2.0, 3.0])))
    law = catalog.stationary_gap_law(spec)
    np.testing.assert_allclose(law.rates, [8.0 / 9.0, 4.0 / 15.0])
    assert law.skew_ok


def test_stationary_gap_law_skew_violation():
    spec = catalog.RankBasedSpec(deltas=np.array([1.0, 0.0, 0.0]),
                                 sigmas=np.sqrt(np.array([1.0, 1.0, 2.0])))
    with pytest.raises(ValueError, match="product-form"):
        catalog.stationary_gap_law(spec)


def test_bc_class_check_identity():
    dm = identity_model(3)
    chk = catalog.bc_class_check(dm.p_mat, dm.b, dm.sigma)
    assert chk.bc1_ok
    assert chk.beta_fit == pytest.approx(1.0)
    assert chk.delta == pytest.approx(1.0)
    assert chk.sigma_bar == pytest.approx(1.0)


def test_bc_class_check_rank_beta_fit():
    dm = rank_model(3)
    chk = catalog.bc_class_check(dm.p_mat, dm.b, dm.sigma)
    assert chk.beta_fit == pytest.approx(0.5, abs=1e-9)
    assert chk.bc1_ok


def test_bc_class_check_rejects_too_fast_beta():
    dm = rank_model(3)
    chk = catalog.bc_class_check(dm.p_mat, dm.b, dm.sigma, kappa=1.0, beta=0.6)
    assert not chk.bc1_ok
    assert chk.max_ratio > 1.0


def test_parse_rank_spec():
    spec = catalog.parse_rank_spec("atlas:4")
    assert spec.n_particles == 4
    np.testing.assert_array_equal(spec.deltas, [1.0, 0.0, 0.0, 0.0])
    with pytest.raises(ValueError):
        catalog.parse_rank_spec("atlas:1")
    with pytest.raises((ValueError, OSError)):
        catalog.parse_rank_spec("nonsense")


def test_rank_spec_json_round_trip(tmp_path):
    spec = catalog.RankBasedSpec(deltas=np.array([1.0, 0.5, 0.0]),
                                 sigmas=np.array([1.0, 1.1, 1.2]))
    path = tmp_path / "spec.json"
    path.write_text(__import__("json").dumps(catalog.rank_spec_to_dict(spec)))
    back = catalog.parse_rank_spec(str(path))
    np.testing.assert_array_equal(back.deltas, spec.deltas)
    np.testing.assert_array_equal(back.sigmas, spec.sigmas)


def test_gap_model_admissible_up_to_20_particles():
    for n in (2, 5, 10, 20):
        params = catalog.rank_based_params(catalog.atlas_spec(n))
        rep = model.validate_params(params)
        assert rep.admissible, rep.messages
