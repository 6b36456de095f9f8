import json
import math

import numpy as np
import pytest

from regarma.data import check_stationarity
from regarma.exceptions import ConfigError
from regarma.simulate import (
    SimulationConfig,
    SimulationTruth,
    generate_dataset,
    pacf_to_coeffs,
    sample_sparse_beta,
    sample_stationary_coeffs,
    true_conditional_mean,
    write_simulation,
)


def roots_outside_unit_circle(c):
    # independent oracle: roots of 1 - c_1 z - ... - c_k z^k
    if np.all(c == 0):
        return True
    poly = np.r_[-np.asarray(c)[::-1], 1.0]
    return bool(np.all(np.abs(np.roots(poly)) > 1.0))


def test_sparse_beta_counts_and_range():
    rng = np.random.default_rng(0)
    beta = sample_sparse_beta(10, 0.9, rng)
    assert np.sum(beta == 0) == 9
    beta = sample_sparse_beta(50, 0.0, rng)
    assert np.all(beta != 0) and np.all(np.abs(beta) < 1)


def test_sparse_beta_dead_zone_and_distinct():
    beta = sample_sparse_beta(400, 0.1, np.random.default_rng(1))
    nz = beta[beta != 0]
    assert nz.size == 360
    assert np.all(np.abs(nz) >= 0.05)
    assert np.unique(nz).size == nz.size


def test_sparse_beta_is_deterministic():
    a = sample_sparse_beta(25, 0.5, np.random.default_rng(3))
    b = sample_sparse_beta(25, 0.5, np.random.default_rng(3))
    np.testing.assert_array_equal(a, b)


def test_stationary_coeffs_small_orders():
    rng = np.random.default_rng(4)
    assert sample_stationary_coeffs(0, rng).size == 0
    for _ in range(100):
        (c,) = sample_stationary_coeffs(1, rng)
        assert abs(c) < 0.9 and 1 / abs(c) > 1.11


def test_order_three_draws_all_stationary():
    rng = np.random.default_rng(5)
    draws = [sample_stationary_coeffs(3, rng) for _ in range(10_000)]
    assert all(roots_outside_unit_circle(c) for c in draws)


def test_durbin_levinson_small_cases():
    np.testing.assert_allclose(pacf_to_coeffs([0.5]), [0.5])
    # phi_2 = kappa_2, phi_1 = kappa_1 (1 - kappa_2)
    np.testing.assert_allclose(pacf_to_coeffs([0.5, 0.2]), [0.4, 0.2])


def test_noiseless_recursion_identity():
    truth = SimulationTruth(np.zeros(3), np.array([0.5]), np.zeros(0), 1e-12)
    cfg = SimulationConfig(T=200, r=3, p=1, q=0, sigma=1e-12, seed=6)
    ds, _ = generate_dataset(cfg, truth=truth)
    np.testing.assert_allclose(ds.y[1:] - 0.5 * ds.y[:-1], 0, atol=1e-9)


def test_same_seed_is_bit_identical_and_seeds_differ():
    cfg = SimulationConfig(T=80, r=6, seed=7)
    a, ta = generate_dataset(cfg)
    b, tb = generate_dataset(cfg)
    np.testing.assert_array_equal(a.y, b.y)
    np.testing.assert_array_equal(a.X, b.X)
    np.testing.assert_array_equal(ta.beta0, tb.beta0)
    c, _ = generate_dataset(SimulationConfig(T=80, r=6, seed=8))
    assert not np.array_equal(a.y, c.y)


def test_ols_recovers_beta_without_dynamics():
    cfg = SimulationConfig(T=4000, r=5, zero_proportion=0.0, sigma=1.0, p=0, q=0, seed=9)
    ds, truth = generate_dataset(cfg)
    coef, rss, *_ = np.linalg.lstsq(ds.X, ds.y, rcond=None)
    s2 = rss[0] / (ds.T - ds.r)
    se = np.sqrt(s2 * np.diag(np.linalg.inv(ds.X.T @ ds.X)))
    assert np.all(np.abs(coef - truth.beta0) < 3 * se)


def test_burn_in_removes_transient():
    # single windows are too short for a 20% moment check, so compare
    # ensemble moments over seeds
    tail_mean, tail_var, ret_mean, ret_var = [], [], [], []
    for seed in range(100):
        cfg = SimulationConfig(T=500, r=3, sigma=1.0, p=2, q=1, seed=seed)
        ds, _, burn = generate_dataset(cfg, return_burn_in=True)
        tail = burn[burn.size // 2:]
        tail_mean.append(tail.mean())
        tail_var.append(tail.var())
        ret_mean.append(ds.y.mean())
        ret_var.append(ds.y.var())
    sd = math.sqrt(np.mean(ret_var))
    assert abs(np.mean(tail_mean) - np.mean(ret_mean)) < 0.2 * sd
    assert abs(np.mean(tail_var) / np.mean(ret_var) - 1) < 0.2


def test_truth_invariants_hold():
    for seed in range(50):
        _, tr = generate_dataset(SimulationConfig(T=30, r=8, p=3, q=3, seed=seed))
        nz = tr.beta0[tr.beta0 != 0]
        assert np.all(np.abs(nz) < 1) and np.unique(nz).size == nz.size
        assert check_stationarity(tr.phi0).is_stationary
        assert check_stationarity(tr.theta0).is_stationary


def test_true_conditional_mean_matches_recursion():
    ds, tr = generate_dataset(SimulationConfig(T=50, r=4, p=2, q=1, seed=10))
    rows = np.arange(2, 50)
    np.testing.assert_allclose(true_conditional_mean(ds, tr, rows) + tr.noise[rows], ds.y[rows],
                               atol=1e-12)
    with pytest.raises(ConfigError):
        true_conditional_mean(ds, tr, [0])


def test_config_validation():
    with pytest.raises(ConfigError):
        SimulationConfig(zero_proportion=1.0)
    with pytest.raises(ConfigError):
        SimulationConfig(sigma=0.0)
    with pytest.raises(ConfigError):
        SimulationConfig(T=3, p=2, q=1)
    with pytest.raises(ConfigError):
        generate_dataset(SimulationConfig(r=2, p=0, q=0),
                         truth=SimulationTruth(np.zeros(3), np.zeros(0), np.zeros(0), 1.0))


def test_write_simulation_round_trip(tmp_path):
    cfg = SimulationConfig(T=20, r=10, zero_proportion=0.5, seed=11)
    ds, tr = generate_dataset(cfg)
    csv_path, json_path = write_simulation(ds, tr, cfg, tmp_path)
    doc = json.loads(json_path.read_text())
    back = SimulationTruth.from_dict(doc["truth"])
    np.testing.assert_array_equal(back.beta0, tr.beta0)
    assert np.sum(back.beta0 == 0) == 5
    assert doc["config"]["seed"] == 11
    assert len(csv_path.read_text().splitlines()) == 21
