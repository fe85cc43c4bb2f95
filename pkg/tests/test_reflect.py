"""One-step orthant projection, path simulators, trajectory persistence."""
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import identity_model, random_admissible, random_substochastic, rank_model
from rbmrate import reflect
from rbmrate import _rng


# ---------------------------------------------------------------------------
# one-step projection (LCP)

def test_skorokhod_step_identity_closed_form():
    z = np.array([[-1.0, 2.0], [0.5, -3.0]])
    x, dl = reflect.skorokhod_step(z, np.zeros((2, 2)))
    np.testing.assert_array_equal(x, [[0.0, 2.0], [0.5, 0.0]])
    np.testing.assert_array_equal(dl, [[1.0, 0.0], [0.0, 3.0]])


def test_skorokhod_step_rank2_oracle():
    dm = rank_model(3)
    x, dl = reflect.skorokhod_step(np.array([-1.0, 0.0]), dm.p_mat)
    np.testing.assert_allclose(x, [0.0, 0.0], atol=1e-14)
    np.testing.assert_allclose(dl, [4.0 / 3.0, 2.0 / 3.0], rtol=1e-12)


def test_skorokhod_step_single_vector_shape():
    x, dl = reflect.skorokhod_step(np.array([-2.0]), np.zeros((1, 1)))
    assert x.shape == (1,) and dl.shape == (1,)
    assert x[0] == 0.0 and dl[0] == 2.0


def _reference_fixed_point(z, p):
    lam = np.zeros_like(z)
    for _ in range(200_000):
        nxt = np.maximum(0.0, lam @ p - z)
        if np.max(np.abs(nxt - lam)) < 1e-15:
            return nxt
        lam = nxt
    return lam


def test_skorokhod_step_random_battery():
    rng = np.random.default_rng(42)
    for d in (1, 2, 3, 5, 10):
        for trial in range(5):
            p = random_substochastic(d, 1000 * d + trial, scale=0.85)
            z = rng.normal(0.0, 2.0, (60, d))
            x, dl = reflect.skorokhod_step(z, p)
            ref = _reference_fixed_point(z, p)
            np.testing.assert_allclose(dl, ref, atol=1e-9)
            assert np.all(x >= 0.0)
            assert np.all(dl >= 0.0)
            assert np.max(np.abs(x * dl)) == 0.0   # exact complementarity
            resid = x - z - dl @ (np.eye(d) - p)
            assert np.max(np.abs(resid)) <= 1e-12 * max(1.0, np.abs(z).max())


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10_000), d=st.integers(1, 6))
def test_skorokhod_step_l1_nonexpansive(seed, d):
    rng = np.random.default_rng(seed)
    p = random_substochastic(d, seed, scale=rng.uniform(0.2, 0.95))
    z1 = rng.normal(0.0, 2.0, d)
    z2 = rng.normal(0.0, 2.0, d)
    x1, _ = reflect.skorokhod_step(z1, p)
    x2, _ = reflect.skorokhod_step(z2, p)
    assert np.abs(x1 - x2).sum() <= np.abs(z1 - z2).sum() + 1e-10


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10_000), d=st.integers(1, 6))
def test_skorokhod_step_isotone(seed, d):
    rng = np.random.default_rng(seed)
    p = random_substochastic(d, seed + 1, scale=rng.uniform(0.2, 0.95))
    z = rng.normal(0.0, 2.0, d)
    shift = rng.uniform(0.0, 1.0, d)
    x_lo, _ = reflect.skorokhod_step(z, p)
    x_hi, _ = reflect.skorokhod_step(z + shift, p)
    assert np.all(x_hi >= x_lo - 1e-10)


def test_skorokhod_step_rejects_bad_shapes():
    with pytest.raises(ValueError):
        reflect.skorokhod_step(np.zeros((3, 2)), np.zeros((3, 3)))


# ---------------------------------------------------------------------------
# simulators

def test_sim_config_validation():
    with pytest.raises(ValueError):
        reflect.SimConfig(dt=0.0, horizon=1.0)
    with pytest.raises(ValueError):
        reflect.SimConfig(dt=0.01, horizon=-1.0)
    with pytest.raises(ValueError):
        reflect.SimConfig(dt=0.01, horizon=1.0, n_paths=0)
    with pytest.raises(ValueError):
        reflect.SimConfig(dt=0.01, horizon=1.0, lcp_tol=0.0)
    cfg = reflect.SimConfig(dt=0.25, horizon=1.0)
    assert cfg.n_steps == 4


def test_simulate_rbm_shapes_and_nonnegativity():
    dm = rank_model(3)
    cfg = reflect.SimConfig(dt=0.05, horizon=2.0, n_paths=3, seed=9)
    trajs = reflect.simulate_rbm(dm, np.array([1.0, 0.5]), cfg)
    assert len(trajs) == 3
    for j, traj in enumerate(trajs):
        assert traj.states.shape == (41, 2)
        assert traj.dl.shape == (40, 2)
        assert traj.times[0] == 0.0 and traj.times[-1] == pytest.approx(2.0)
        assert np.all(traj.states >= 0.0)
        assert np.all(traj.dl >= 0.0)
        assert traj.path_index == j


def test_simulate_rbm_reproducible_and_prefix_invariant():
    dm = rank_model(3)
    x0 = np.array([1.0, 0.5])
    cfg3 = reflect.SimConfig(dt=0.05, horizon=1.0, n_paths=3, seed=9)
    cfg5 = reflect.SimConfig(dt=0.05, horizon=1.0, n_paths=5, seed=9)
    a = reflect.simulate_rbm(dm, x0, cfg3)
    b = reflect.simulate_rbm(dm, x0, cfg5)
    for ta, tb in zip(a, b):   # path j is the same regardless of batch size
        np.testing.assert_array_equal(ta.states, tb.states)
        np.testing.assert_array_equal(ta.dl, tb.dl)
    again = reflect.simulate_rbm(dm, x0, cfg3)
    for ta, tb in zip(a, again):
        np.testing.assert_array_equal(ta.states, tb.states)


def test_simulate_rbm_matches_lindley_recursion_1d():
    dm = identity_model(1)
    cfg = reflect.SimConfig(dt=0.01, horizon=5.0, n_paths=2, seed=123)
    trajs = reflect.simulate_rbm(dm, np.array([0.3]), cfg)
    sqdt = np.sqrt(cfg.dt)
    for j, traj in enumerate(trajs):
        incs = _rng.substream(cfg.seed, j).standard_normal((cfg.n_steps, 1))
        x = 0.3
        for k in range(cfg.n_steps):
            x = max(x + incs[k, 0] * sqdt - cfg.dt, 0.0)
            assert abs(traj.states[k + 1, 0] - x) <= 1e-12


def test_simulate_rbm_rejects_bad_start():
    dm = rank_model(3)
    cfg = reflect.SimConfig(dt=0.1, horizon=1.0)
    with pytest.raises(ValueError):
        reflect.simulate_rbm(dm, np.array([-1.0, 0.0]), cfg)
    with pytest.raises(ValueError):
        reflect.simulate_rbm(dm, np.array([1.0]), cfg)


def test_simulate_normal_rbm_warns_on_unstable_v():
    dm = rank_model(3)
    cfg = reflect.SimConfig(dt=0.1, horizon=1.0, n_paths=1, seed=0)
    with pytest.warns(UserWarning):
        reflect.simulate_normal_rbm(dm, np.zeros(2), np.array([10.0, 10.0]), cfg)


def test_simulate_normal_rbm_componentwise_reflection():
    dm = identity_model(2)
    cfg = reflect.SimConfig(dt=0.05, horizon=1.0, n_paths=2, seed=4)
    trajs = reflect.simulate_normal_rbm(dm, np.zeros(2), np.array([0.5, 0.5]), cfg)
    for traj in trajs:
        assert np.all(traj.states >= 0.0)
        assert np.all(traj.dl >= 0.0)
        # pushing only at the boundary
        pushed = traj.dl > 0.0
        assert np.all(traj.states[1:][pushed] == 0.0)


def test_simulate_coupled_shares_driver():
    dm = rank_model(3)
    cfg = reflect.SimConfig(dt=0.05, horizon=2.0, n_paths=2, seed=11)
    runs = reflect.simulate_coupled(dm, np.array([1.0, 1.0]), np.zeros(2), cfg)
    assert len(runs) == 2
    for run in runs:
        assert run.traj_plus is None
        # same driver: the two paths converge toward each other, never diverge
        gap = np.abs(run.traj_x.states - run.traj_y.states).sum(axis=1)
        assert gap[0] == pytest.approx(2.0)
        assert np.all(np.diff(gap) <= 1e-10)
        assert run.provenance["sampler"] == _rng.SAMPLER_NAME
        assert run.provenance["seed"] == 11


def test_simulate_coupled_with_bounding_process():
    dm = rank_model(3)
    cfg = reflect.SimConfig(dt=0.05, horizon=1.0, n_paths=1, seed=2)
    v = np.array([1.0 / 3.0, 1.0 / 3.0])
    runs = reflect.simulate_coupled(dm, np.ones(2), np.zeros(2), cfg, v=v)
    plus = runs[0].traj_plus
    assert plus is not None
    assert np.all(plus.states >= 0.0)


# ---------------------------------------------------------------------------
# persistence

def test_trajectory_round_trip(tmp_path):
    dm = rank_model(3)
    cfg = reflect.SimConfig(dt=0.1, horizon=1.0, n_paths=1, seed=5)
    traj = reflect.simulate_rbm(dm, np.array([1.0, 2.0]), cfg)[0]
    base = str(tmp_path / "run")
    reflect.save_trajectory(traj, base)
    back = reflect.load_trajectory(base)
    np.testing.assert_array_equal(back.times, traj.times)
    np.testing.assert_array_equal(back.states, traj.states)
    np.testing.assert_array_equal(back.dl, traj.dl)
    assert back.path_index == traj.path_index
    assert back.seed == traj.seed


def test_trajectory_base_accepts_produced_file_names(tmp_path):
    dm = rank_model(3)
    cfg = reflect.SimConfig(dt=0.1, horizon=1.0, n_paths=1, seed=5)
    traj = reflect.simulate_rbm(dm, np.array([1.0, 2.0]), cfg)[0]
    base = str(tmp_path / "run")
    reflect.save_trajectory(traj, base + ".bin")
    assert (tmp_path / "run.bin").exists() and (tmp_path / "run.json").exists()
    for handle in (base, base + ".bin", base + ".json"):
        back = reflect.load_trajectory(handle)
        np.testing.assert_array_equal(back.states, traj.states)


def test_trajectory_sidecar_schema(tmp_path):
    import json
    dm = identity_model(1)
    cfg = reflect.SimConfig(dt=0.1, horizon=0.5, n_paths=1, seed=5)
    traj = reflect.simulate_rbm(dm, np.zeros(1), cfg)[0]
    base = str(tmp_path / "t")
    reflect.save_trajectory(traj, base)
    meta = json.loads((tmp_path / "t.json").read_text())
    assert meta["schema"] == reflect.SCHEMA_TRAJECTORY
    assert meta["d"] == 1
    assert meta["rows"] == 6
    assert meta["columns"][0] == "t"


def test_trajectory_load_rejects_corruption(tmp_path):
    dm = identity_model(1)
    cfg = reflect.SimConfig(dt=0.1, horizon=0.5, n_paths=1, seed=5)
    traj = reflect.simulate_rbm(dm, np.zeros(1), cfg)[0]
    base = str(tmp_path / "t")
    reflect.save_trajectory(traj, base)
    payload = (tmp_path / "t.bin").read_bytes()
    (tmp_path / "t.bin").write_bytes(payload[:-8])
    with pytest.raises(ValueError):
        reflect.load_trajectory(base)


def test_trajectory_csv(tmp_path):
    dm = rank_model(3)
    cfg = reflect.SimConfig(dt=0.5, horizon=1.0, n_paths=1, seed=5)
    traj = reflect.simulate_rbm(dm, np.zeros(2), cfg)[0]
    path = tmp_path / "t.csv"
    reflect.trajectory_csv(traj, path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "t,x1,x2,dl1,dl2"
    assert len(lines) == 4   # header + 3 grid rows
