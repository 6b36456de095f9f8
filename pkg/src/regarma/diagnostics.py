"""Fit metrics, residual ACF, empirical MSPE and the prediction-error bounds."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data import build_lag_design
from .exceptions import InputError, TooFewSamplesError
from .selection import information_criterion


@dataclass(frozen=True)
class MetricsReport:
    mse: float
    mae: float
    bic: float
    df: int
    model_label: str


def compute_metrics(fit, label="REGARMA"):
    """MSE, MAE and BIC of a fit on its effective sample (standardized scale)."""
    res = fit.residuals
    return MetricsReport(float(np.mean(res ** 2)), float(np.mean(np.abs(res))),
                         information_criterion(fit, "bic"), int(fit.df), label)


def model_label(fit):
    if fit.p == 0 and fit.q == 0:
        return "ADAPTIVE-LASSO" if fit.adaptive else "LASSO"
    if fit.q == 0:
        return f"REGAR({fit.p})"
    if fit.p == 0:
        return f"REGMA({fit.q})"
    return f"REGARMA({fit.p},{fit.q})"


def write_metrics(reports, path):
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["model", "mse", "mae", "bic", "nonzero"])
        for m in reports:
            w.writerow([m.model_label, repr(m.mse), repr(m.mae), repr(m.bic), m.df])


def mspe_hat(predicted, oracle):
    """Empirical mean squared prediction error ``||Y_hat - Y°||^2 / n``."""
    a = np.asarray(predicted, dtype=float).reshape(-1)
    b = np.asarray(oracle, dtype=float).reshape(-1)
    if a.size != b.size:
        raise InputError(f"length mismatch: {a.size} vs {b.size}")
    if a.size == 0:
        raise InputError("empty prediction vectors")
    d = a - b
    return float(d @ d / d.size)


@dataclass(frozen=True)
class BoundInputs:
    """Block l1 budgets ``K = (K_lambda, K_gamma, K_tau)`` and sup-norms ``M = (M1, M2, M3)``."""

    per_block_K: tuple
    per_block_M: tuple
    sigma: float
    n: int
    r: int
    p: int
    q: int

    def __post_init__(self):
        if len(self.per_block_K) != 3 or len(self.per_block_M) != 3:
            raise InputError("per-block K and M need three entries each")
        if min(self.per_block_K) < 0 or min(self.per_block_M) < 0 or self.sigma < 0:
            raise InputError("K, M and sigma must be nonnegative")
        if self.n < 1 or min(self.r, self.p, self.q) < 0:
            raise InputError("n must be positive and r, p, q nonnegative")

    @property
    def K_max(self):
        return float(max(self.per_block_K))

    @property
    def M_max(self):
        return float(max(self.per_block_M))

    @property
    def K_star(self):
        kl, kg, kt = self.per_block_K
        return float(max(kl ** 2, kg ** 2, kt ** 2, 2 * kl * kg, 2 * kl * kt, 2 * kg * kt))

    @property
    def counts(self):
        return (self.r, self.p, self.q)


def realized_bound_inputs(fit, ds, sigma):
    """Bound inputs using the fit's own block l1 norms and the design's sup-norms.

    Blocks of width zero contribute ``K = M = 0``.
    """
    design = build_lag_design(ds, fit.p, fit.q, fit.eps_hat, rows=fit.rows)
    sup = lambda A: float(np.max(np.abs(A))) if A.size else 0.0  # noqa: E731
    K = (float(np.abs(fit.beta).sum()), float(np.abs(fit.phi).sum()),
         float(np.abs(fit.theta).sum()))
    M = (sup(design.block("x")), sup(design.block("ar")), sup(design.block("ma")))
    return BoundInputs(K, M, float(sigma), design.n, fit.r, fit.p, fit.q)


def theorem5_bound(b):
    """``2 K_max M_max sigma / sqrt(n) * sum_a sqrt(2 ln 2a)`` over the nonzero block sizes."""
    s = sum(np.sqrt(2.0 * np.log(2.0 * a)) for a in b.counts if a > 0)
    return float(2.0 * b.K_max * b.M_max * b.sigma / np.sqrt(b.n) * s)


def remark2_bound(b):
    """``theorem5_bound`` plus the cross-block term ``8 K* sum_ij M_i M_j sqrt(2 ln(2 a_i a_j) / n)``."""
    cross = 0.0
    for ai, Mi in zip(b.counts, b.per_block_M):
        for aj, Mj in zip(b.counts, b.per_block_M):
            if ai > 0 and aj > 0:
                cross += Mi * Mj * np.sqrt(2.0 * np.log(2.0 * ai * aj) / b.n)
    return float(theorem5_bound(b) + 8.0 * b.K_star * cross)


def residual_acf(residuals, max_lag):
    """Sample autocorrelations at lags ``1..max_lag`` (lag 0 is 1 by definition).

    Uses the biased ``1/n`` autocovariance; a constant series yields NaN.
    """
    x = np.asarray(residuals, dtype=float).reshape(-1)
    max_lag = int(max_lag)
    if max_lag < 1:
        raise InputError("max_lag must be positive")
    if x.size <= max_lag:
        raise TooFewSamplesError(f"{x.size} residuals cannot give {max_lag} lags")
    x = x - x.mean()
    c0 = x @ x / x.size
    if c0 == 0:
        return np.full(max_lag, np.nan)
    return np.array([x[k:] @ x[:-k] / x.size / c0 for k in range(1, max_lag + 1)])


def write_acf(named_residuals, max_lag, path):
    """CSV with one column per model: lag, then the ACF of each residual series."""
    labels = list(named_residuals)
    acfs = [residual_acf(named_residuals[k], max_lag) for k in labels]
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["lag", *labels])
        for lag in range(1, max_lag + 1):
            w.writerow([lag, *(repr(float(a[lag - 1])) for a in acfs)])
