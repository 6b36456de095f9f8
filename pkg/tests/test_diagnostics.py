import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from regarma.data import standardize
from regarma.diagnostics import (
    BoundInputs,
    compute_metrics,
    model_label,
    mspe_hat,
    realized_bound_inputs,
    remark2_bound,
    residual_acf,
    theorem5_bound,
    write_acf,
    write_metrics,
)
from regarma.exceptions import InputError, TooFewSamplesError
from regarma.fit import RegarmaFit, fit_regarma
from regarma.lasso import PenaltyConfig
from regarma.selection import information_criterion, select_penalties
from regarma.simulate import SimulationConfig, generate_dataset

# K = M = sigma = 1, n = 100, r = p = q = 2:
#   first term 2 / 10 * 3 * sqrt(2 ln 4)
#   K* = max(1, 1, 1, 2, 2, 2) = 2; nine pairs of sqrt(2 ln 8 / 100)
UNIT_T5 = 0.9990655333892372
UNIT_R2 = 30.36547485025094


def unit_inputs(**kw):
    d = dict(per_block_K=(1.0, 1.0, 1.0), per_block_M=(1.0, 1.0, 1.0), sigma=1.0, n=100,
             r=2, p=2, q=2)
    d.update(kw)
    return BoundInputs(**d)


def residual_fit(res):
    res = np.asarray(res, float)
    n = res.size
    return RegarmaFit(np.zeros(1), np.zeros(0), np.zeros(0), res, np.zeros(n),
                      float(res @ res), 0, float(res @ res) / n, 0, 0,
                      PenaltyConfig.uniform(1, 0, 0, 1.0))


def test_metrics_hand_values():
    m = compute_metrics(residual_fit([0.0, 0.0, 0.0]))
    assert m.mse == 0 and m.mae == 0
    m = compute_metrics(residual_fit([1.0, -1.0]))
    assert m.mse == 1 and m.mae == 1


def test_metrics_bic_is_information_criterion():
    raw, _ = generate_dataset(SimulationConfig(T=80, r=5, seed=0))
    ds, _ = standardize(raw)
    fit = select_penalties(ds, 1, 1).best_fit
    assert compute_metrics(fit).bic == information_criterion(fit, "bic")


def test_model_labels():
    pen = PenaltyConfig.uniform(1, 0, 0, 1.0)
    mk = lambda p, q, a: RegarmaFit(np.zeros(1), np.zeros(p), np.zeros(q), np.zeros(1),  # noqa: E731
                                    np.zeros(1), 0.0, 0, 0.0, p, q, pen, adaptive=a)
    assert model_label(mk(0, 0, True)) == "ADAPTIVE-LASSO"
    assert model_label(mk(2, 0, True)) == "REGAR(2)"
    assert model_label(mk(0, 3, True)) == "REGMA(3)"
    assert model_label(mk(2, 1, True)) == "REGARMA(2,1)"


def test_metrics_csv_layout(tmp_path):
    write_metrics([compute_metrics(residual_fit([1.0, -1.0]), "X")], tmp_path / "m.csv")
    lines = (tmp_path / "m.csv").read_text().splitlines()
    assert lines[0] == "model,mse,mae,bic,nonzero"
    assert lines[1].startswith("X,1.0,1.0,")


def test_mspe_hat_examples():
    assert mspe_hat([1.0, 2.0], [1.0, 2.0]) == 0
    assert mspe_hat([3.0, 1.0], [1.0, 1.0]) == 2
    with pytest.raises(InputError):
        mspe_hat([1.0], [1.0, 2.0])
    with pytest.raises(InputError):
        mspe_hat([], [])


def test_mspe_decreases_with_T_on_average():
    from regarma.harness import oracle_predictions

    means = []
    for T in (50, 250):
        vals = []
        for seed in range(10):
            raw, truth = generate_dataset(SimulationConfig(T=T, r=10, p=1, q=1, seed=seed))
            ds, tr = standardize(raw)
            fit = select_penalties(ds, 1, 1).best_fit
            vals.append(mspe_hat(fit.fitted, oracle_predictions(raw, truth, tr, fit.rows)))
        assert all(np.isfinite(v) and v > 0 for v in vals)
        means.append(np.mean(vals))
    assert means[1] < means[0]


def test_theorem5_unit_example():
    assert theorem5_bound(unit_inputs()) == pytest.approx(UNIT_T5, rel=1e-12)


def test_theorem5_lasso_reduction_and_scaling():
    b = unit_inputs(p=0, q=0, per_block_K=(1.0, 0.0, 0.0))
    assert theorem5_bound(b) == pytest.approx(0.2 * math.sqrt(2 * math.log(4)))
    assert theorem5_bound(unit_inputs(n=400)) == pytest.approx(UNIT_T5 / 2)


def test_remark2_unit_example():
    b = unit_inputs()
    assert b.K_star == 2.0
    assert remark2_bound(b) == pytest.approx(UNIT_R2, rel=1e-12)


def test_remark2_with_empty_lag_blocks():
    b = unit_inputs(per_block_M=(1.0, 0.0, 0.0))
    # only the (x, x) pair survives: sqrt(2 ln(2 * 2 * 2) / 100)
    expected = theorem5_bound(b) + 8 * 2.0 * math.sqrt(2 * math.log(8) / 100)
    assert remark2_bound(b) == pytest.approx(expected)


def test_bound_inputs_validation():
    with pytest.raises(InputError):
        unit_inputs(per_block_K=(1.0, -1.0, 0.0))
    with pytest.raises(InputError):
        unit_inputs(n=0)
    b = unit_inputs(per_block_K=(0.5, 3.0, 1.0), per_block_M=(2.0, 1.0, 4.0))
    assert b.K_max == 3.0 and b.M_max == 4.0


_nonneg = st.floats(0.0, 10.0)
_count = st.integers(0, 50)


@settings(max_examples=200, deadline=None)
@given(st.tuples(_nonneg, _nonneg, _nonneg), st.tuples(_nonneg, _nonneg, _nonneg),
       st.floats(0.0, 5.0), st.integers(1, 1000), _count, _count, _count,
       st.sampled_from(["K0", "K1", "K2", "M0", "M1", "M2", "sigma", "r", "p", "q", "n"]),
       st.floats(0.0, 3.0))
def test_bounds_are_monotone(K, M, sigma, n, r, p, q, which, step):
    base = BoundInputs(K, M, sigma, n, r, p, q)
    d = dict(per_block_K=list(K), per_block_M=list(M), sigma=sigma, n=n, r=r, p=p, q=q)
    if which[0] in "KM":
        key = "per_block_K" if which[0] == "K" else "per_block_M"
        d[key][int(which[1])] += step
    elif which == "sigma":
        d["sigma"] += step
    else:
        d[which] += int(step) + 1
    d["per_block_K"] = tuple(d["per_block_K"])
    d["per_block_M"] = tuple(d["per_block_M"])
    bumped = BoundInputs(**d)
    t0, t1 = theorem5_bound(base), theorem5_bound(bumped)
    r0, r1 = remark2_bound(base), remark2_bound(bumped)
    assert r0 >= t0 and r1 >= t1
    tol = 1e-12 * (1 + abs(t0) + abs(r0))
    if which == "n":
        assert t1 <= t0 + tol and r1 <= r0 + tol
    else:
        assert t1 >= t0 - tol and r1 >= r0 - tol


def test_realized_inputs_match_fit():
    raw, _ = generate_dataset(SimulationConfig(T=60, r=4, p=1, q=1, seed=1))
    ds, _ = standardize(raw)
    fit = fit_regarma(ds, 1, 1, PenaltyConfig.uniform(4, 1, 1, 1.0))
    b = realized_bound_inputs(fit, ds, 0.5)
    assert b.per_block_K == pytest.approx((np.abs(fit.beta).sum(), np.abs(fit.phi).sum(),
                                           np.abs(fit.theta).sum()))
    assert b.per_block_M[0] == pytest.approx(np.abs(ds.X[fit.rows]).max())
    assert b.per_block_M[1] == pytest.approx(np.abs(ds.y[fit.rows - 1]).max())
    assert b.n == fit.n and b.counts == (4, 1, 1)


def test_acf_white_noise_band():
    x = np.random.default_rng(2).standard_normal(1000)
    acf = residual_acf(x, 20)
    assert np.mean(np.abs(acf) < 3 / math.sqrt(1000)) >= 0.95


def test_acf_alternating_and_errors():
    x = 5.0 + np.tile([1.0, -1.0], 50)
    assert residual_acf(x, 1)[0] == pytest.approx(-1.0, abs=0.02)
    assert np.all(np.isnan(residual_acf(np.ones(10), 2)))
    with pytest.raises(TooFewSamplesError):
        residual_acf(np.ones(3), 3)
    with pytest.raises(InputError):
        residual_acf(np.ones(3), 0)


def test_acf_csv(tmp_path):
    rng = np.random.default_rng(3)
    write_acf({"A": rng.normal(size=50), "B": rng.normal(size=50)}, 5, tmp_path / "a.csv")
    lines = (tmp_path / "a.csv").read_text().splitlines()
    assert lines[0] == "lag,A,B" and len(lines) == 6
