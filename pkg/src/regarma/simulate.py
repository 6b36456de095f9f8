"""Data-generating process with known sparse truth.

Regressors are independent stationary Gaussian AR(1) columns, the response
follows the REGARMA recursion with the innovations themselves as the
moving-average series, and a burn-in segment is discarded.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .data import TimeSeriesDataset, check_stationarity, write_csv
from .exceptions import ConfigError

DEAD_ZONE = 0.05
PACF_BOUND = 0.9
X_AR_BOUND = 0.7


@dataclass(frozen=True)
class SimulationConfig:
    T: int = 100
    r: int = 25
    zero_proportion: float = 0.5
    sigma: float = 0.5
    p: int = 1
    q: int = 1
    seed: int = 0
    burn_in: int = 500

    def __post_init__(self):
        if self.T < 1 or self.r < 1:
            raise ConfigError("T and r must be positive")
        if not 0.0 <= self.zero_proportion < 1.0:
            raise ConfigError("zero_proportion must lie in [0, 1)")
        if not self.sigma > 0:
            raise ConfigError("sigma must be positive")
        if self.p < 0 or self.q < 0 or self.p + self.q >= self.T:
            raise ConfigError("orders must be nonnegative with p + q < T")
        if self.burn_in < 1:
            raise ConfigError("burn_in must be positive")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ConfigError("seed must be a 64-bit unsigned integer")


@dataclass(frozen=True)
class SimulationTruth:
    beta0: np.ndarray
    phi0: np.ndarray
    theta0: np.ndarray
    sigma: float
    # innovations e_t over the retained sample (also the MA series)
    noise: np.ndarray = field(default=None, repr=False)

    def to_dict(self):
        return {
            "beta0": self.beta0.tolist(),
            "phi0": self.phi0.tolist(),
            "theta0": self.theta0.tolist(),
            "sigma": float(self.sigma),
            "noise": None if self.noise is None else self.noise.tolist(),
        }

    @classmethod
    def from_dict(cls, d):
        noise = d.get("noise")
        return cls(np.asarray(d["beta0"], float), np.asarray(d["phi0"], float),
                   np.asarray(d["theta0"], float), float(d["sigma"]),
                   None if noise is None else np.asarray(noise, float))


def n_zeros(r, zero_proportion):
    # guard against 0.9 * 10 landing just below an integer
    return int(math.floor(r * zero_proportion + 1e-9))


def sample_sparse_beta(r, zero_proportion, rng, dead_zone=DEAD_ZONE):
    """Sparse coefficient vector with distinct nonzero entries in (-1, 1).

    Exactly ``floor(r * zero_proportion)`` entries are zero, at uniformly
    random positions. Nonzero magnitudes avoid ``[0, dead_zone]``.
    """
    if r < 1:
        raise ConfigError("r must be positive")
    k0 = n_zeros(r, zero_proportion)
    beta = np.zeros(r)
    support = np.sort(rng.choice(r, size=r - k0, replace=False))
    vals = np.empty(0)
    while vals.size < support.size:
        m = support.size - vals.size
        draw = rng.uniform(dead_zone, 1.0, m) * rng.choice([-1.0, 1.0], m)
        vals = np.unique(np.concatenate([vals, draw]))
    # np.unique sorts; restore a random order
    beta[support] = rng.permutation(vals[: support.size])
    return beta


def pacf_to_coeffs(pacf):
    """Durbin-Levinson map from partial autocorrelations to AR coefficients."""
    phi = np.zeros(0)
    for kappa in pacf:
        phi = np.concatenate([phi - kappa * phi[::-1], [kappa]])
    return phi


def sample_stationary_coeffs(order, rng, bound=PACF_BOUND):
    """Coefficients whose lag polynomial has all roots outside the unit circle.

    Partial autocorrelations are drawn uniformly from ``(-bound, bound)``,
    which is sufficient for stationarity by construction.
    """
    if order < 0:
        raise ConfigError("order must be nonnegative")
    coeffs = pacf_to_coeffs(rng.uniform(-bound, bound, int(order)))
    assert check_stationarity(coeffs).is_stationary, "Durbin-Levinson map left the stationary region"
    return coeffs


def simulate_ar1_columns(length, r, rng):
    """Independent stationary AR(1) columns with unit innovation variance."""
    coef = rng.uniform(-X_AR_BOUND, X_AR_BOUND, r)
    innov = rng.standard_normal((length, r))
    X = np.empty_like(innov)
    # start from the stationary distribution so no transient remains
    X[0] = innov[0] / np.sqrt(1.0 - coef ** 2)
    for t in range(1, length):
        X[t] = coef * X[t - 1] + innov[t]
    return X


def regarma_recursion(X, beta, phi, theta, e):
    """``y_t = x_t'beta + sum phi_j y_{t-j} + sum theta_i e_{t-i} + e_t`` with zero initial lags."""
    T = e.size
    p, q = phi.size, theta.size
    xb = X @ beta
    y = np.zeros(T)
    for t in range(T):
        v = xb[t] + e[t]
        for j in range(1, min(p, t) + 1):
            v += phi[j - 1] * y[t - j]
        for i in range(1, min(q, t) + 1):
            v += theta[i - 1] * e[t - i]
        y[t] = v
    return y


def generate_dataset(config, truth=None, return_burn_in=False):
    """Simulate one REGARMA dataset and its truth.

    The dataset is returned on the original scale (not standardized). A
    fixed ``truth`` may be supplied to reuse coefficients across replicates.
    """
    rng = np.random.default_rng(int(config.seed))
    if truth is None:
        beta0 = sample_sparse_beta(config.r, config.zero_proportion, rng)
        phi0 = sample_stationary_coeffs(config.p, rng)
        theta0 = sample_stationary_coeffs(config.q, rng)
    else:
        beta0, phi0, theta0 = truth.beta0, truth.phi0, truth.theta0
        if (beta0.size, phi0.size, theta0.size) != (config.r, config.p, config.q):
            raise ConfigError("supplied truth does not match the configured shape")
    total = config.T + config.burn_in
    X_all = simulate_ar1_columns(total, config.r, rng)
    e = config.sigma * rng.standard_normal(total)
    y_all = regarma_recursion(X_all, beta0, phi0, theta0, e)
    ds = TimeSeriesDataset(y_all[config.burn_in:], X_all[config.burn_in:])
    out_truth = SimulationTruth(beta0, phi0, theta0, float(config.sigma), e[config.burn_in:].copy())
    if return_burn_in:
        return ds, out_truth, y_all[: config.burn_in]
    return ds, out_truth


def true_conditional_mean(ds, truth, rows):
    """``Y°_t`` from the true coefficients and true innovations at time indices ``rows``."""
    rows = np.asarray(rows, dtype=np.intp)
    p, q = truth.phi0.size, truth.theta0.size
    if rows.size and rows.min() < max(p, q):
        raise ConfigError("rows must leave room for the true lags")
    out = ds.X[rows] @ truth.beta0
    for j in range(1, p + 1):
        out = out + truth.phi0[j - 1] * ds.y[rows - j]
    for i in range(1, q + 1):
        out = out + truth.theta0[i - 1] * truth.noise[rows - i]
    return out


def write_simulation(ds, truth, config, out_dir):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_csv(ds, out / "dataset.csv")
    doc = {"config": asdict(config), "truth": truth.to_dict()}
    (out / "truth.json").write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return out / "dataset.csv", out / "truth.json"
