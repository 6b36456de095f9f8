"""Datasets, standardization, lag-design construction and stationarity checks.

Time indices are 0-based throughout: ``y[t]`` is the response at time ``t``
and the effective sample of an order-``(p, q)`` design starts at ``t = p + q``
unless a later start is requested.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .exceptions import (
    ConstantColumnError,
    InputError,
    NonFiniteError,
    OrderTooLargeError,
)

STATIONARITY_MARGIN = 1e-8


@dataclass(frozen=True)
class TimeSeriesDataset:
    """Time-ordered response ``y`` (length T) and regressors ``X`` (T x r)."""

    y: np.ndarray
    X: np.ndarray
    column_names: tuple = ()
    response_name: str = "y"
    standardized: bool = False

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float).reshape(-1)
        X = np.asarray(self.X, dtype=float)
        if X.ndim == 1:
            X = X.reshape(-1, 1) if X.size else np.zeros((y.size, 0))
        if y.size < 1:
            raise InputError("dataset needs at least one observation")
        if X.shape[0] != y.size:
            raise InputError(f"X has {X.shape[0]} rows but y has {y.size}")
        if not (np.all(np.isfinite(y)) and np.all(np.isfinite(X))):
            raise NonFiniteError("dataset contains NaN or infinite values")
        names = tuple(self.column_names) or tuple(f"x{j + 1}" for j in range(X.shape[1]))
        if len(names) != X.shape[1]:
            raise InputError(f"{len(names)} column names for {X.shape[1]} columns")
        y.setflags(write=False)
        X.setflags(write=False)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "column_names", names)

    @property
    def T(self):
        return self.y.size

    @property
    def r(self):
        return self.X.shape[1]


@dataclass(frozen=True)
class StandardizationTransform:
    """Per-column location/scale used to map between data and model scale."""

    y_mean: float
    y_scale: float
    x_means: np.ndarray
    x_scales: np.ndarray

    def apply(self, ds):
        X = (ds.X - self.x_means) / self.x_scales if ds.r else ds.X
        return TimeSeriesDataset((ds.y - self.y_mean) / self.y_scale, X,
                                 ds.column_names, ds.response_name, standardized=True)

    def inverse(self, ds):
        X = ds.X * self.x_scales + self.x_means if ds.r else ds.X
        return TimeSeriesDataset(ds.y * self.y_scale + self.y_mean, X,
                                 ds.column_names, ds.response_name, standardized=False)

    def y_to_original(self, values):
        return np.asarray(values, dtype=float) * self.y_scale + self.y_mean

    def to_dict(self):
        return {
            "y_mean": float(self.y_mean),
            "y_scale": float(self.y_scale),
            "x_means": [float(v) for v in self.x_means],
            "x_scales": [float(v) for v in self.x_scales],
        }

    @classmethod
    def from_dict(cls, d):
        return cls(float(d["y_mean"]), float(d["y_scale"]),
                   np.asarray(d["x_means"], dtype=float),
                   np.asarray(d["x_scales"], dtype=float))


def standardize(ds):
    """Center every column of ``X`` and ``y`` and scale to unit variance.

    The standard deviation uses divisor T (population form). Constant
    columns raise :class:`ConstantColumnError` rather than being passed
    through.

    Returns
    -------
    (TimeSeriesDataset, StandardizationTransform)
    """
    if ds.T < 2:
        raise InputError("standardization needs at least two observations")
    y_mean = float(ds.y.mean())
    y_scale = float(ds.y.std())
    if not y_scale > 0:
        raise ConstantColumnError(ds.response_name)
    x_means = ds.X.mean(axis=0)
    x_scales = ds.X.std(axis=0)
    for name, s in zip(ds.column_names, x_scales):
        if not s > 0:
            raise ConstantColumnError(name)
    tr = StandardizationTransform(y_mean, y_scale, x_means, x_scales)
    return tr.apply(ds), tr


def unstandardize(ds, transform):
    return transform.inverse(ds)


@dataclass(frozen=True)
class LagDesign:
    """Stacked design ``H = (AR lags | MA lags | X)`` over the effective rows.

    ``rows`` holds the original time index of every design row, which is
    ``start, start + 1, ..., T - 1`` unless a row mask removed some of them.
    """

    H: np.ndarray
    y_eff: np.ndarray
    p: int
    q: int
    r: int
    rows: np.ndarray = field(repr=False)

    @property
    def T0(self):
        return self.p + self.q

    @property
    def n(self):
        return self.y_eff.size

    @property
    def width(self):
        return self.p + self.q + self.r

    def block(self, name):
        p, q = self.p, self.q
        sl = {"ar": slice(0, p), "ma": slice(p, p + q), "x": slice(p + q, None)}[name]
        return self.H[:, sl]


def lag_rows(T, p, q, start=None, mask=None):
    """Time indices usable as design rows.

    A row ``t`` needs ``t >= start`` (default ``p + q``) and, when ``mask`` is
    given, every index in ``t - (p + q) .. t`` must be unmasked.
    """
    T0 = p + q
    start = T0 if start is None else int(start)
    if start < T0:
        raise InputError(f"start {start} precedes the first usable row {T0}")
    rows = np.arange(start, T)
    if mask is not None and rows.size:
        mask = np.asarray(mask, dtype=bool)
        bad = np.concatenate([[0], np.cumsum(~mask)])
        # count of masked indices in [t - T0, t]
        n_bad = bad[rows + 1] - bad[rows - T0]
        rows = rows[n_bad == 0]
    return rows


def build_lag_design(ds, p, q, eps=None, start=None, rows=None):
    """Assemble the ``n x (p + q + r)`` lag design for orders ``(p, q)``.

    Parameters
    ----------
    ds : TimeSeriesDataset
    p, q : int
        Autoregressive and moving-average orders.
    eps : array_like, optional
        Residual series of length T whose lags fill the MA block. May be
        omitted when ``q == 0``.
    start : int, optional
        First effective time index; defaults to ``p + q``. A larger start
        fixes the sample when comparing several orders on one window.
    rows : array_like of int, optional
        Explicit row indices (overrides ``start``); each must be ``>= p + q``.
    """
    p, q = int(p), int(q)
    if p < 0 or q < 0:
        raise InputError("orders must be nonnegative")
    T = ds.T
    if p + q >= T:
        raise OrderTooLargeError(f"p + q = {p + q} must be below T = {T}")
    if rows is None:
        rows = lag_rows(T, p, q, start)
    else:
        rows = np.asarray(rows, dtype=np.intp)
        if rows.size and rows.min() < p + q:
            raise InputError("design rows must not precede p + q")
    if rows.size == 0:
        raise OrderTooLargeError("no effective rows remain for this design")
    if q > 0:
        if eps is None:
            raise InputError("eps is required when q > 0")
        eps = np.asarray(eps, dtype=float).reshape(-1)
        if eps.size != T:
            raise InputError(f"eps has length {eps.size}, expected {T}")
    H = np.empty((rows.size, p + q + ds.r))
    for j in range(1, p + 1):
        H[:, j - 1] = ds.y[rows - j]
    for i in range(1, q + 1):
        H[:, p + i - 1] = eps[rows - i]
    H[:, p + q:] = ds.X[rows]
    return LagDesign(H, ds.y[rows].copy(), p, q, ds.r, rows)


@dataclass(frozen=True)
class StationarityReport:
    roots: np.ndarray
    min_modulus: float
    is_stationary: bool


def check_stationarity(coeffs, margin=STATIONARITY_MARGIN):
    """Roots of ``1 - c_1 L - ... - c_k L^k`` via companion-matrix eigenvalues.

    The roots are the reciprocals of the companion eigenvalues. An empty (or
    all-zero) coefficient vector is vacuously stationary.
    """
    c = np.asarray(coeffs, dtype=float).reshape(-1)
    if not np.all(np.isfinite(c)):
        raise NonFiniteError("coefficients must be finite")
    nz = np.flatnonzero(c)
    c = c[: nz[-1] + 1] if nz.size else c[:0]
    k = c.size
    if k == 0:
        return StationarityReport(np.zeros(0, dtype=complex), np.inf, True)
    companion = np.zeros((k, k))
    companion[0] = c
    companion[1:, :-1] = np.eye(k - 1)
    eig = np.linalg.eigvals(companion)
    # an eigenvalue that underflows to zero is a root at infinity
    with np.errstate(divide="ignore"):
        roots = 1.0 / eig
    mod = float(np.min(np.abs(roots)))
    return StationarityReport(roots, mod, bool(mod > 1.0 + margin))


def read_csv(path, response, columns=None):
    """Load a header-first numeric CSV; ``response`` names the y column.

    Rows are taken in file order (assumed increasing time). Every other
    column, or the subset named in ``columns``, becomes a regressor.
    """
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise InputError(f"{path}: file is empty") from None
        body = [row for row in reader if any(cell.strip() for cell in row)]
    if not body:
        raise InputError(f"{path}: no data rows")
    if response not in header:
        raise InputError(f"{path}: response column {response!r} not found")
    names = [h for h in header if h != response] if columns is None else list(columns)
    for name in names:
        if name not in header:
            raise InputError(f"{path}: column {name!r} not found")
    idx = {h: k for k, h in enumerate(header)}
    values = np.empty((len(body), len(header)))
    for i, row in enumerate(body):
        if len(row) != len(header):
            raise InputError(f"{path}: row {i + 2} has {len(row)} fields, expected {len(header)}")
        for k, cell in enumerate(row):
            try:
                values[i, k] = float(cell)
            except ValueError:
                raise InputError(
                    f"{path}: row {i + 2}, column {header[k]!r}: not numeric ({cell!r})"
                ) from None
    bad = ~np.isfinite(values)
    if bad.any():
        i, k = np.argwhere(bad)[0]
        raise NonFiniteError(f"{path}: row {i + 2}, column {header[k]!r} is not finite")
    X = values[:, [idx[n] for n in names]] if names else np.zeros((len(body), 0))
    return TimeSeriesDataset(values[:, idx[response]], X, tuple(names), response)


def write_csv(ds, path):
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([ds.response_name, *ds.column_names])
        for t in range(ds.T):
            w.writerow([repr(float(ds.y[t])), *(repr(float(v)) for v in ds.X[t])])
