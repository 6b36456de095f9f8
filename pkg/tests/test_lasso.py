import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import box_min, grid_min, objective, soft_threshold
from regarma.data import LagDesign
from regarma.exceptions import DimensionMismatchError, InputError
from regarma.lasso import (
    PenaltyConfig,
    SolverOptions,
    kkt_residual,
    lambda_max,
    solve_weighted_lasso,
)


def plain_design(H, y):
    H = np.asarray(H, float)
    return LagDesign(H, np.asarray(y, float), 0, 0, H.shape[1], np.arange(H.shape[0]))


def random_problem(rng, n=None, k=None):
    n = n or int(rng.integers(5, 51))
    k = k if k is not None else int(rng.integers(1, 11))
    H = rng.normal(size=(n, k))
    H = (H - H.mean(0)) / H.std(0)
    y = H @ (rng.normal(size=k) * (rng.random(k) < 0.5)) + rng.normal(size=n)
    w = rng.uniform(0, 2 * np.abs(H.T @ y).max() + 1e-3, k) * rng.random()
    return plain_design(H, y), w


def test_orthonormal_design_matches_soft_threshold():
    rng = np.random.default_rng(0)
    Q, _ = np.linalg.qr(rng.normal(size=(40, 6)))
    y = rng.normal(size=40) * 3
    w = np.array([0.0, 0.5, 1.0, 2.0, 4.0, 50.0])
    res = solve_weighted_lasso(plain_design(Q, y), w, SolverOptions(tol=1e-12, kkt_tol=1e-10))
    # with H'H = I the objective separates: b_j = S(h_j'y, w_j / 2)
    np.testing.assert_allclose(res.coefficients, soft_threshold(Q.T @ y, w / 2), atol=1e-8)
    assert res.converged


def test_zero_penalty_is_least_squares():
    rng = np.random.default_rng(1)
    H = rng.normal(size=(30, 4))
    y = rng.normal(size=30)
    res = solve_weighted_lasso(plain_design(H, y), np.zeros(4), SolverOptions(tol=1e-12))
    ols = np.linalg.lstsq(H, y, rcond=None)[0]
    np.testing.assert_allclose(res.coefficients, ols, atol=1e-6)


def test_single_column_closed_form():
    # h = (1, 1), y = (1, 2): rho = 3, ||h||^2 = 2, b = (3 - w/2) / 2
    d = plain_design([[1.0], [1.0]], [1.0, 2.0])
    assert solve_weighted_lasso(d, [2.0]).coefficients[0] == pytest.approx(1.0)
    assert solve_weighted_lasso(d, [6.0]).coefficients[0] == 0.0


def test_lambda_max_zeroes_everything():
    rng = np.random.default_rng(2)
    d, _ = random_problem(rng, 30, 5)
    lm = lambda_max(d)
    np.testing.assert_array_equal(solve_weighted_lasso(d, np.full(5, lm)).coefficients, 0)
    assert np.any(solve_weighted_lasso(d, np.full(5, 0.99 * lm)).coefficients != 0)


@pytest.mark.parametrize("seed", range(12))
def test_small_problems_reach_grid_minimum(seed):
    rng = np.random.default_rng(100 + seed)
    k = 1 + seed % 2
    d, w = random_problem(rng, int(rng.integers(5, 20)), k)
    res = solve_weighted_lasso(d, w)
    assert res.objective <= grid_min(d.H, d.y_eff, w) + 1e-4


@pytest.mark.parametrize("seed", range(25))
def test_three_column_problems_reach_box_minimum(seed):
    rng = np.random.default_rng(200 + seed)
    d, w = random_problem(rng, int(rng.integers(5, 50)), 3)
    res = solve_weighted_lasso(d, w)
    assert res.objective <= box_min(d.H, d.y_eff, w) + 1e-4


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_converged_solves_satisfy_kkt(seed):
    d, w = random_problem(np.random.default_rng(seed))
    res = solve_weighted_lasso(d, w)
    if res.converged:
        assert kkt_residual(d, w, res.coefficients) <= 1e-5
    assert res.objective == pytest.approx(objective(d.H, d.y_eff, w, res.coefficients))


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_column_permutation_permutes_solution(seed):
    rng = np.random.default_rng(seed)
    d, w = random_problem(rng, k=int(rng.integers(2, 8)))
    perm = rng.permutation(d.H.shape[1])
    opts = SolverOptions(tol=1e-10, kkt_tol=1e-8)
    a = solve_weighted_lasso(d, w, opts)
    b = solve_weighted_lasso(plain_design(d.H[:, perm], d.y_eff), w[perm], opts)
    assert b.objective == pytest.approx(a.objective, rel=1e-8, abs=1e-8)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_warm_start_reaches_same_objective(seed):
    rng = np.random.default_rng(seed)
    d, w = random_problem(rng)
    cold = solve_weighted_lasso(d, w, SolverOptions(tol=1e-10, kkt_tol=1e-8))
    warm = solve_weighted_lasso(d, w, SolverOptions(tol=1e-10, kkt_tol=1e-8,
                                                    warm_start=rng.normal(size=w.size)))
    assert warm.objective == pytest.approx(cold.objective, rel=1e-8, abs=1e-8)


def test_debug_mode_checks_monotone_descent():
    rng = np.random.default_rng(3)
    d, w = random_problem(rng, 40, 8)
    res = solve_weighted_lasso(d, w, SolverOptions(debug=True))
    assert res.converged


def test_iteration_cap_reports_not_converged():
    rng = np.random.default_rng(4)
    H = rng.normal(size=(40, 6))
    H[:, 1] = H[:, 0] + 1e-3 * rng.normal(size=40)
    d = plain_design(H, rng.normal(size=40))
    res = solve_weighted_lasso(d, np.full(6, 0.01), SolverOptions(max_iter=1))
    assert not res.converged
    assert res.iterations == 1


def test_zero_column_stays_zero():
    H = np.c_[np.zeros(5), np.arange(5.0)]
    res = solve_weighted_lasso(plain_design(H, np.arange(5.0)), [0.0, 0.0],
                               SolverOptions(warm_start=[3.0, 0.0]))
    assert res.coefficients[0] == 0.0
    assert res.coefficients[1] == pytest.approx(1.0)


def test_kkt_residual_hand_values():
    d = plain_design([[1.0], [1.0]], [1.0, 2.0])
    # gradient of RSS at b = 0 is -2 h'y = -6; zero coefficient violates by 6 - w
    assert kkt_residual(d, [2.0], [0.0]) == pytest.approx(4.0)
    assert kkt_residual(d, [2.0], [1.0]) == pytest.approx(0.0)
    assert kkt_residual(d, [8.0], [0.0]) == 0.0


def test_penalty_config_blocks_and_errors():
    pc = PenaltyConfig.uniform(3, 2, 1, 1.0, 2.0, 3.0)
    np.testing.assert_array_equal(pc.stacked(), [2, 2, 3, 1, 1, 1])
    back = PenaltyConfig.from_stacked(pc.stacked(), 3, 2, 1)
    np.testing.assert_array_equal(back.lambda_weights, [1, 1, 1])
    np.testing.assert_array_equal(back.tau_weights, [3])
    assert PenaltyConfig.from_dict(pc.to_dict()).shape == (3, 2, 1)
    with pytest.raises(InputError):
        PenaltyConfig([-1.0], [], [])
    with pytest.raises(InputError):
        PenaltyConfig([np.nan], [], [])
    d = plain_design(np.ones((3, 2)), np.ones(3))
    with pytest.raises(DimensionMismatchError):
        solve_weighted_lasso(d, PenaltyConfig.uniform(3, 0, 0, 1.0))
    with pytest.raises(DimensionMismatchError):
        solve_weighted_lasso(d, [1.0, 1.0], SolverOptions(warm_start=[0.0]))
