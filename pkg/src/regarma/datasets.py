"""Bundled example data.

The stock-index example is a synthetic stand-in shaped like the daily
Istanbul exchange returns (536 days, seven foreign index regressors); it
is generated by :func:`make_index_returns_surrogate` and shipped as CSV so
the data used in tests and examples never depends on a network fetch.
"""
from __future__ import annotations

from importlib import resources

import numpy as np

from .data import TimeSeriesDataset, read_csv
from .simulate import regarma_recursion

SURROGATE_FILE = "ise_surrogate.csv"
SURROGATE_COLUMNS = ("SP", "DAX", "FTSE", "NIKKEI", "BOVESPA", "EU", "EM")
SURROGATE_RESPONSE = "ISE"


def make_index_returns_surrogate(seed=20090105, T=536):
    """Correlated index returns and a REGARMA(2,1) response.

    The regressors share one common market factor plus a European factor
    for DAX/FTSE/EU, mimicking the correlation pattern of daily index
    returns. The response loads on four of the seven regressors.
    """
    rng = np.random.default_rng(seed)
    burn = 200
    n = T + burn
    market = rng.standard_normal(n)
    europe = rng.standard_normal(n)
    loads = {
        "SP": (0.6, 0.0), "DAX": (0.6, 0.5), "FTSE": (0.6, 0.45), "NIKKEI": (0.35, 0.0),
        "BOVESPA": (0.55, 0.0), "EU": (0.65, 0.55), "EM": (0.7, 0.0),
    }
    X = np.column_stack([a * market + b * europe + rng.standard_normal(n)
                         for a, b in (loads[c] for c in SURROGATE_COLUMNS)])
    # daily-return magnitudes (percent / 100)
    X *= 0.012
    beta = np.array([0.0, 0.35, 0.0, 0.15, 0.25, 0.0, 0.45])
    phi = np.array([0.25, -0.15])
    theta = np.array([0.3])
    e = 0.011 * rng.standard_normal(n)
    y = regarma_recursion(X, beta, phi, theta, e)
    return TimeSeriesDataset(y[burn:], X[burn:], SURROGATE_COLUMNS, SURROGATE_RESPONSE)


def surrogate_path():
    return resources.files("regarma") / "data" / SURROGATE_FILE


def load_index_returns_surrogate():
    """The vendored surrogate CSV as a dataset (original scale)."""
    with resources.as_file(surrogate_path()) as path:
        return read_csv(path, SURROGATE_RESPONSE)
