"""Penalty and order selection: BIC/AIC, blocked K-fold CV, methods a and b.

A penalty grid is a sequence of ``(lambda_scale, gamma_scale, tau_scale)``
triples; each triple expands to a uniform :class:`PenaltyConfig` for the
orders being fitted. For adaptive fits the triple is the base penalty that
the pilot weights divide.
"""
from __future__ import annotations

import csv
import enum
import itertools
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .data import build_lag_design, lag_rows
from .exceptions import ConfigError, InputError, TooFewSamplesError
from .fit import (
    DEFAULT_CAP,
    _two_step,
    compute_adaptive_weights,
    predict_series,
)
from .lasso import PenaltyConfig, lambda_max


class Criterion(str, enum.Enum):
    BIC = "bic"
    AIC = "aic"
    CV = "cv"


@dataclass(frozen=True)
class CriterionRow:
    lambda_scale: float
    gamma_scale: float
    tau_scale: float
    p: int
    q: int
    n: int
    df: int
    criterion: float

    @property
    def scales(self):
        return (self.lambda_scale, self.gamma_scale, self.tau_scale)


@dataclass(frozen=True)
class SelectionResult:
    best_penalties: PenaltyConfig
    best_orders: tuple
    criterion_table: list
    criterion_kind: Criterion
    best_index: int = 0
    best_fit: object = field(default=None, repr=False)

    @property
    def best_row(self):
        return self.criterion_table[self.best_index]


def information_criterion(fit, kind="bic"):
    """``n ln(RSS/n) + c * df`` with ``c = ln n`` (BIC) or ``2`` (AIC).

    Uses the effective sample size of the fit. A zero RSS (only reachable
    with noiseless data) returns ``-inf``.
    """
    kind = Criterion(kind)
    if kind is Criterion.CV:
        raise ConfigError("cross-validation is not an information criterion")
    n = fit.n
    if n < 1:
        raise InputError("fit has an empty effective sample")
    rss = fit.rss
    if rss <= 0.0:
        return -np.inf
    penalty = np.log(n) if kind is Criterion.BIC else 2.0
    return float(n * np.log(rss / n) + fit.df * penalty)


def _scale_triple(s):
    if np.isscalar(s):
        return (float(s),) * 3
    s = tuple(float(v) for v in s)
    if len(s) != 3:
        raise InputError("grid entries must be a scalar or a (lambda, gamma, tau) triple")
    return s


def normalize_grid(grid):
    if grid is None:
        return None
    out = [_scale_triple(s) for s in grid]
    if not out:
        raise InputError("penalty grid is empty")
    return out


def expand(scales, r, p, q):
    lam, gam, tau = scales
    return PenaltyConfig.uniform(r, p, q, lam, gam, tau)


def default_penalty_grid(ds, p, q, n_values=50, ratio=1e-4, joint=True, start=None):
    """Log-spaced penalty scales from the data's ``lambda_max`` down to ``ratio * lambda_max``.

    ``lambda_max`` is taken from the regression + AR design (the MA block is
    unknown before step 1). ``joint=True`` applies one multiplier to all
    blocks; otherwise the grid is the product of independent per-block grids.
    """
    T0 = p + q if start is None else start
    d = build_lag_design(ds, p, 0, start=T0)
    lmax = lambda_max(d)
    if lmax <= 0:
        lmax = 1.0
    path = lmax * np.logspace(0.0, np.log10(ratio), n_values)
    if joint:
        return [(float(c), float(c), float(c)) for c in path]
    lam_path = path if ds.r else [0.0]
    if p:
        ar_max = lambda_max(d, np.r_[np.ones(p), np.zeros(ds.r)]) or lmax
        gam_path = ar_max * np.logspace(0.0, np.log10(ratio), n_values)
    else:
        gam_path = [0.0]
    tau_path = path if q else [0.0]
    return [tuple(float(v) for v in t) for t in itertools.product(lam_path, gam_path, tau_path)]


def _row_key(row):
    crit = row.criterion
    crit = -np.inf if crit == -np.inf else round(crit, 9)
    return (crit, row.df, row.p + row.q, row.scales)


def _argmin(table):
    return min(range(len(table)), key=lambda i: _row_key(table[i]))


def fit_path(ds, p, q, grid, adaptive=True, exponent=1.0, cap=DEFAULT_CAP, start=None,
             mask=None, options=None, pilot_scales=None):
    """Fit every grid point in order, warm-starting each solve from the previous one.

    With ``pilot_scales`` set, a single non-adaptive pilot at those scales
    supplies the adaptive weights for the whole path; otherwise each grid
    point's pilot uses the same base penalty.
    """
    fits = []
    warm_pilot = warm_final = None
    fixed_pilot = None
    if adaptive and pilot_scales is not None:
        fixed_pilot, _ = _two_step(ds, p, q, expand(pilot_scales, ds.r, p, q), start=start,
                                   mask=mask, options=options)
    for scales in grid:
        base = expand(scales, ds.r, p, q)
        if adaptive:
            pilot = fixed_pilot
            if pilot is None:
                pilot, warm_pilot = _two_step(ds, p, q, base, start=start, mask=mask,
                                              options=options, warm=warm_pilot)
            weights = compute_adaptive_weights(pilot, base, exponent, cap)
            fit, warm_final = _two_step(ds, p, q, weights, start=start, mask=mask,
                                        options=options, warm=warm_final)
            fit = replace(fit, adaptive=True, base_penalties=base)
        else:
            fit, warm_final = _two_step(ds, p, q, base, start=start, mask=mask,
                                        options=options, warm=warm_final)
        fits.append(fit)
    return fits


def _bic_pilot_scales(ds, p, q, grid, kind, start, options):
    fits = fit_path(ds, p, q, grid, adaptive=False, start=start, options=options)
    table = [CriterionRow(*s, p, q, f.n, f.df, information_criterion(f, kind))
             for s, f in zip(grid, fits)]
    return table[_argmin(table)].scales


def select_penalties(ds, p, q, grid=None, kind="bic", adaptive=True, exponent=1.0,
                     cap=DEFAULT_CAP, start=None, options=None, pilot="same", folds=5):
    """Choose penalty scales for fixed orders by BIC, AIC or blocked CV.

    Parameters
    ----------
    grid : sequence of float or (lambda, gamma, tau), optional
        Defaults to :func:`default_penalty_grid`.
    kind : {"bic", "aic", "cv"}
    pilot : {"same", "bic"}
        Adaptive pilot at each grid point's own base penalty, or one pilot
        at the non-adaptive penalty minimizing ``kind``.

    Returns
    -------
    SelectionResult
        Ties on the criterion go to smaller df, then smaller ``p + q``, then
        the lexicographically smaller scale triple.
    """
    kind = Criterion(kind)
    if kind is Criterion.CV:
        return cross_validate(ds, p, q, grid, folds, adaptive=adaptive, exponent=exponent,
                              cap=cap, options=options)
    grid = normalize_grid(grid) or default_penalty_grid(ds, p, q, start=start)
    pilot_scales = None
    if adaptive and pilot == "bic":
        pilot_scales = _bic_pilot_scales(ds, p, q, grid, kind, start, options)
    elif pilot != "same":
        raise ConfigError(f"unknown pilot mode {pilot!r}")
    fits = fit_path(ds, p, q, grid, adaptive, exponent, cap, start=start, options=options,
                    pilot_scales=pilot_scales)
    table = [CriterionRow(*s, p, q, f.n, f.df, information_criterion(f, kind))
             for s, f in zip(grid, fits)]
    best = _argmin(table)
    return SelectionResult(expand(table[best].scales, ds.r, p, q), (p, q), table, kind,
                           best, fits[best])


def select_orders_method_a(ds, Pmax, Qmax, grid=None, kind="bic", adaptive=True,
                           exponent=1.0, cap=DEFAULT_CAP, options=None, pilot="same",
                           folds=5):
    """Exhaustive search over ``(p, q)`` in ``[0, Pmax] x [0, Qmax]``.

    Each order uses its own effective sample ``n = T - p - q``, so the
    criterion values compare fits on slightly different windows (recorded in
    the table's ``n`` column).
    """
    if Pmax + Qmax >= ds.T:
        raise InputError(f"Pmax + Qmax = {Pmax + Qmax} must be below T = {ds.T}")
    grid = normalize_grid(grid)
    table, results = [], []
    for p in range(Pmax + 1):
        for q in range(Qmax + 1):
            res = select_penalties(ds, p, q, grid, kind, adaptive, exponent, cap,
                                   options=options, pilot=pilot, folds=folds)
            results.append((len(table), res))
            table.extend(res.criterion_table)
    best = _argmin(table)
    row = table[best]
    # the sub-search owning the global best row also holds its fit
    owner = next(res for off, res in results
                 if off <= best < off + len(res.criterion_table))
    return SelectionResult(expand(row.scales, ds.r, row.p, row.q), (row.p, row.q), table,
                           Criterion(kind), best, owner.best_fit)


def implied_orders(fit):
    """Largest lag index with a nonzero AR (resp. MA) coefficient."""
    nz_phi = np.flatnonzero(np.abs(fit.phi) > 1e-10)
    nz_theta = np.flatnonzero(np.abs(fit.theta) > 1e-10)
    return (int(nz_phi[-1]) + 1 if nz_phi.size else 0,
            int(nz_theta[-1]) + 1 if nz_theta.size else 0)


def select_orders_method_b(ds, Pmax, Qmax, grid=None, kind="bic", adaptive=True,
                           exponent=1.0, cap=DEFAULT_CAP, options=None, pilot="same",
                           start=None):
    """Fit at the maximal orders on the fixed window ``n = T - (Pmax + Qmax)``.

    The selected orders are the largest lags whose coefficients survive the
    l1 shrinkage at the criterion-selected penalties; each table row records
    the orders implied by its own fit.
    """
    if Pmax + Qmax >= ds.T:
        raise InputError(f"Pmax + Qmax = {Pmax + Qmax} must be below T = {ds.T}")
    kind = Criterion(kind)
    if kind is Criterion.CV:
        raise ConfigError("method b selects penalties by an information criterion")
    start = Pmax + Qmax if start is None else start
    grid = normalize_grid(grid) or default_penalty_grid(ds, Pmax, Qmax, start=start)
    pilot_scales = None
    if adaptive and pilot == "bic":
        pilot_scales = _bic_pilot_scales(ds, Pmax, Qmax, grid, kind, start, options)
    fits = fit_path(ds, Pmax, Qmax, grid, adaptive, exponent, cap, start=start,
                    options=options, pilot_scales=pilot_scales)
    table = []
    for s, f in zip(grid, fits):
        p, q = implied_orders(f)
        table.append(CriterionRow(*s, p, q, f.n, f.df, information_criterion(f, kind)))
    best = _argmin(table)
    row = table[best]
    return SelectionResult(expand(row.scales, ds.r, Pmax, Qmax), (row.p, row.q), table, kind,
                           best, fits[best])


def contiguous_folds(rows, K):
    return [np.asarray(b) for b in np.array_split(np.asarray(rows), K)]


def cross_validate(ds, p, q, grid=None, K=5, adaptive=True, exponent=1.0, cap=DEFAULT_CAP,
                   options=None, shuffle=False):
    """Blocked K-fold cross-validation over the effective sample.

    Folds are contiguous blocks of the rows ``p + q .. T - 1`` (never
    shuffled). Training uses every row whose lag window avoids the held-out
    block; held-out rows are scored by one-step-ahead squared error using
    the observed lags. The table's ``df`` column is the full-sample fit's.
    """
    if shuffle:
        raise ConfigError("shuffled folds would leak serial dependence; only blocked folds are supported")
    K = int(K)
    if K < 2:
        raise ConfigError("K must be at least 2")
    rows = lag_rows(ds.T, p, q)
    n = rows.size
    if n < K:
        raise TooFewSamplesError(f"{n} effective rows cannot form {K} folds")
    grid = normalize_grid(grid) or default_penalty_grid(ds, p, q)
    scores = np.zeros((len(grid), K))
    for k, block in enumerate(contiguous_folds(rows, K)):
        mask = np.ones(ds.T, dtype=bool)
        mask[block] = False
        try:
            fits = fit_path(ds, p, q, grid, adaptive, exponent, cap, mask=mask, options=options)
        except InputError as exc:
            raise TooFewSamplesError(f"fold {k} leaves no training rows: {exc}") from None
        for g, f in enumerate(fits):
            err = ds.y[block] - predict_series(f, ds, rows=block)
            scores[g, k] = float(np.mean(err ** 2))
    full = fit_path(ds, p, q, grid, adaptive, exponent, cap, options=options)
    crit = scores.mean(axis=1)
    table = [CriterionRow(*s, p, q, f.n, f.df, float(c)) for s, f, c in zip(grid, full, crit)]
    best = _argmin(table)
    return SelectionResult(expand(table[best].scales, ds.r, p, q), (p, q), table,
                           Criterion.CV, best, full[best])


CRITERION_COLUMNS = ("lambda_scale", "gamma_scale", "tau_scale", "p", "q", "n", "df",
                     "criterion")


def write_criterion_table(result, path):
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CRITERION_COLUMNS)
        for row in result.criterion_table:
            w.writerow([repr(row.lambda_scale), repr(row.gamma_scale), repr(row.tau_scale),
                        row.p, row.q, row.n, row.df, repr(row.criterion)])
