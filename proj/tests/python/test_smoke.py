"""Python binding smoke tests: the exposed operations behave like the core."""

import math

import numpy as np
import pytest

import xlvr


@pytest.fixture(scope="module")
def cfg():
    return xlvr.ArrayConfig(n_antennas=16, n_subarrays=4, carrier_hz=100e9, n_rf=2)


def test_steering_vector_unit_norm(cfg):
    b = xlvr.steering_vector(cfg, theta=0.2, r=10.0)
    assert b.shape == (16,)
    assert abs(np.linalg.norm(b) - 1.0) < 1e-12


def test_far_field_limit(cfg):
    far = xlvr.steering_vector_far_field(cfg, 0.3)
    near = xlvr.steering_vector(cfg, 0.3, 1e6 * cfg.wavelength)
    assert np.max(np.abs(near - far)) < 1e-3


def test_mask_and_channel(cfg):
    u_sub, u = xlvr.sample_vr_mask(cfg, seed=7)
    assert u_sub.sum() >= 1
    assert u.sum() == u_sub.sum() * (16 // 4)
    sample = xlvr.channel_vector(cfg, 0.1, 12.0, u)
    h = sample.h
    assert np.all((h == 0) == (u == 0))


def test_observation_noiseless(cfg):
    ds = xlvr.generate_dataset(cfg, count=3, seed=11)
    A = xlvr.make_combiner(cfg, n_pilots=4, seed=5)
    assert np.max(np.abs(np.abs(A) * math.sqrt(16) - 1.0)) < 1e-12
    y, sigma2 = xlvr.observe(ds[0].h, A, cfg.n_rf, 0.0, noise_seed=3)
    assert sigma2 == 0.0
    assert np.allclose(y, A @ ds[0].h)


def test_dun_step_identities(cfg):
    rng = np.random.default_rng(1)
    n, m = 8, 6
    h = rng.normal(size=n) + 1j * rng.normal(size=n)
    z = rng.normal(size=n) + 1j * rng.normal(size=n)
    y = rng.normal(size=m) + 1j * rng.normal(size=m)
    A = (rng.normal(size=(m, n)) + 1j * rng.normal(size=(m, n))) / math.sqrt(n)
    u = np.ones(n)

    frozen = xlvr.dun_step(h, y, A, z, u, gamma=0.0, mu=1.0)
    assert np.array_equal(frozen, h)

    # Uniform mask matches the ablation step bitwise.
    a = xlvr.dun_step(h, y, A, z, u, gamma=0.3, mu=1.0, beta=10.0)
    b = xlvr.mdisr_step(h, y, A, z, gamma=0.3, mu=1.0)
    assert np.array_equal(a, b)

    w = xlvr.weight_matrix_diag(np.array([1.0, 0.0]), 99.0)
    assert w[0] == pytest.approx(1.0)
    assert w[1] == pytest.approx(10.0)


def test_metrics():
    h = np.array([1 + 2j, -0.5 + 0j, 1j])
    assert xlvr.nmse(h, h) == 0.0
    assert xlvr.nmse(np.zeros(3, complex), h) == pytest.approx(1.0)
    assert xlvr.nmse(2 * h, h) == pytest.approx(1.0)
    u = np.array([1.0, 0.0, 1.0, 0.0])
    v = np.array([1.0, 0.0, 0.0, 0.0])
    assert xlvr.sdr(v, u) == pytest.approx(0.75)


def test_normalize_adjacency_star():
    g = np.zeros((3, 3))
    g[0, 1] = g[1, 0] = 1.0
    g[0, 2] = g[2, 0] = 1.0
    gb = xlvr.normalize_adjacency(g)
    assert gb[0, 1] == pytest.approx(1.0 / math.sqrt(6.0))


def test_network_train_estimate_roundtrip(tmp_path, cfg):
    data = xlvr.generate_dataset(cfg, count=48, seed=3)
    netw = xlvr.Network(layers=2, conv_channels=6, seed=1)
    netw.init_thresholds(cfg, n_pilots=4, snr_db=10.0, probe=data[:8], seed=2)
    log = netw.train(cfg, n_pilots=4, data=data, epochs=2, batch_size=16, seed=5,
                     snr_min_db=10.0, snr_max_db=10.0, threads=2)
    assert len(log) == 2
    assert log[-1]["loss"] <= log[0]["loss"] * 1.5  # smoke: no blow-up

    A = xlvr.make_combiner(cfg, n_pilots=4, seed=9)
    sigma2 = xlvr.sigma2_for_snr(data[0].h, A, 10.0)
    y, _ = xlvr.observe(data[0].h, A, cfg.n_rf, sigma2, noise_seed=13)
    h_hat, u_soft = netw.estimate(A, y)
    assert h_hat.shape == (16,)
    assert u_soft.shape == (16,)
    assert np.all((u_soft > 0) & (u_soft < 1))

    q = netw.prune(0.5)
    assert q >= 0.0
    census = netw.census()
    assert census["nonzero"] < census["total"]

    path = tmp_path / "model.ckpt"
    netw.save(path)
    loaded = xlvr.Network.load(path)
    h2, _ = loaded.estimate(A, y)
    assert np.array_equal(h_hat, h2)


def test_genie_ls_noiseless(cfg):
    ds = xlvr.generate_dataset(cfg, count=1, seed=21)
    A = xlvr.make_combiner(cfg, n_pilots=8, seed=2)
    y, _ = xlvr.observe(ds[0].h, A, cfg.n_rf, 0.0, noise_seed=1)
    h_hat = xlvr.genie_ls(y, A, ds[0].u)
    assert xlvr.nmse(h_hat, ds[0].h) < 1e-12
