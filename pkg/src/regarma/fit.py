"""Two-step REGARMA fitting, adaptive reweighting and one-step prediction.

Step 1 fits the regression + AR model (no MA block) and keeps its
residuals. Step 2 refits with the lagged step-1 residuals as the MA block.
All fitting happens on the standardized scale, without an intercept.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

import numpy as np

from .data import build_lag_design, lag_rows
from .exceptions import (
    DimensionMismatchError,
    InputError,
    InsufficientHistoryError,
    OrderTooLargeError,
)
from .lasso import PenaltyConfig, SolverOptions, solve_weighted_lasso

ZERO_THRESHOLD = 1e-10
DEFAULT_CAP = 1e6
FIT_FORMAT = "regarma-fit"
FIT_VERSION = 1


@dataclass(frozen=True)
class RegarmaFit:
    """Estimated coefficients and step-2 fit on the effective sample.

    ``rows`` are the original time indices of the effective sample and
    ``eps_hat`` is the length-T step-1 residual series (zero where step 1
    had no row) whose lags feed the MA block.
    """

    beta: np.ndarray
    phi: np.ndarray
    theta: np.ndarray
    residuals: np.ndarray
    fitted: np.ndarray
    objective: float
    df: int
    sigma2_hat: float
    p: int
    q: int
    penalties: PenaltyConfig
    adaptive: bool = False
    rows: np.ndarray = field(default=None, repr=False)
    eps_hat: np.ndarray = field(default=None, repr=False)
    step1_coefficients: np.ndarray = field(default=None, repr=False)
    converged: bool = True
    iterations: int = 0
    kkt_violation: float = 0.0
    base_penalties: PenaltyConfig | None = None

    @property
    def n(self):
        return self.residuals.size

    @property
    def r(self):
        return self.beta.size

    @property
    def rss(self):
        return float(self.residuals @ self.residuals)

    @property
    def coefficients(self):
        """Stacked in design order: AR | MA | X."""
        return np.concatenate([self.phi, self.theta, self.beta])

    def to_dict(self):
        d = {
            "format": FIT_FORMAT,
            "version": FIT_VERSION,
            "p": self.p,
            "q": self.q,
            "r": self.r,
            "n": self.n,
            "adaptive": self.adaptive,
            "penalties": self.penalties.to_dict(),
            "base_penalties": None if self.base_penalties is None else self.base_penalties.to_dict(),
            "beta": self.beta.tolist(),
            "phi": self.phi.tolist(),
            "theta": self.theta.tolist(),
            "df": self.df,
            "sigma2_hat": self.sigma2_hat,
            "objective": self.objective,
            "converged": self.converged,
            "iterations": self.iterations,
            "kkt_violation": self.kkt_violation,
            "rows": self.rows.tolist(),
            "eps_hat": self.eps_hat.tolist(),
            "step1_coefficients": self.step1_coefficients.tolist(),
            "fitted": self.fitted.tolist(),
            "residuals": self.residuals.tolist(),
        }
        return d

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, d):
        if d.get("format") != FIT_FORMAT:
            raise InputError("not a serialized REGARMA fit")
        if int(d.get("version", -1)) != FIT_VERSION:
            raise InputError(f"unsupported fit format version {d.get('version')}")
        arr = lambda k: np.asarray(d[k], dtype=float)  # noqa: E731
        base = d.get("base_penalties")
        return cls(
            beta=arr("beta"), phi=arr("phi"), theta=arr("theta"),
            residuals=arr("residuals"), fitted=arr("fitted"),
            objective=float(d["objective"]), df=int(d["df"]),
            sigma2_hat=float(d["sigma2_hat"]), p=int(d["p"]), q=int(d["q"]),
            penalties=PenaltyConfig.from_dict(d["penalties"]),
            adaptive=bool(d["adaptive"]),
            rows=np.asarray(d["rows"], dtype=np.intp), eps_hat=arr("eps_hat"),
            step1_coefficients=arr("step1_coefficients"),
            converged=bool(d["converged"]), iterations=int(d["iterations"]),
            kkt_violation=float(d["kkt_violation"]),
            base_penalties=None if base is None else PenaltyConfig.from_dict(base),
        )

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def count_nonzero(coef):
    return int(np.sum(np.abs(coef) > ZERO_THRESHOLD))


def _check_shape(ds, p, q, penalties):
    r, pp, qq = penalties.shape
    if (r, pp, qq) != (ds.r, p, q):
        raise DimensionMismatchError(
            f"penalties of shape (r={r}, p={pp}, q={qq}) do not fit orders ({p}, {q}) with r={ds.r}"
        )


def step2_rows(T, p, q, step1_rows, start=None, mask=None):
    """Rows whose AR lags are observed and whose MA lags are step-1 residuals."""
    rows = lag_rows(T, p, q, start, mask)
    if q == 0 or rows.size == 0:
        return rows
    valid = np.zeros(T + 1, dtype=int)
    valid[np.asarray(step1_rows) + 1] = 1
    c = np.cumsum(valid)
    # number of step-1 rows in [t - q, t - 1]
    have = c[rows] - c[rows - q]
    return rows[have == q]


def _two_step(ds, p, q, penalties, start=None, mask=None, options=None, warm=None,
              refresh_steps=0):
    """Core of :func:`fit_regarma`; returns the fit plus both raw coefficient vectors."""
    p, q = int(p), int(q)
    if p < 0 or q < 0:
        raise InputError("orders must be nonnegative")
    _check_shape(ds, p, q, penalties)
    opts = options or SolverOptions()
    T = ds.T
    if p + q >= T:
        raise OrderTooLargeError(f"p + q = {p + q} must be below T = {T}")
    start1 = None if start is None else int(start) - q
    rows1 = lag_rows(T, p, 0, start1, mask)
    d1 = build_lag_design(ds, p, 0, rows=rows1)
    w1 = penalties.restrict(0)
    warm1 = None if warm is None else warm[0]
    s1 = solve_weighted_lasso(d1, w1, replace(opts, warm_start=warm1))
    eps_hat = np.zeros(T)
    eps_hat[rows1] = d1.y_eff - d1.H @ s1.coefficients
    if q == 0:
        design, sol = d1, s1
    else:
        rows2 = step2_rows(T, p, q, rows1, start, mask)
        design = build_lag_design(ds, p, q, eps_hat, rows=rows2)
        warm2 = None if warm is None else warm[1]
        sol = solve_weighted_lasso(design, penalties, replace(opts, warm_start=warm2))
        for _ in range(int(refresh_steps)):
            # optional: refresh the MA block from the current residuals and re-solve
            eps_hat = np.zeros(T)
            eps_hat[design.rows] = design.y_eff - design.H @ sol.coefficients
            rows2 = step2_rows(T, p, q, design.rows, start, mask)
            design = build_lag_design(ds, p, q, eps_hat, rows=rows2)
            sol = solve_weighted_lasso(design, penalties,
                                       replace(opts, warm_start=sol.coefficients))
    b = sol.coefficients
    fitted = design.H @ b
    residuals = design.y_eff - fitted
    fit = RegarmaFit(
        beta=b[p + q:].copy(), phi=b[:p].copy(), theta=b[p:p + q].copy(),
        residuals=residuals, fitted=fitted, objective=sol.objective,
        df=count_nonzero(b), sigma2_hat=float(residuals @ residuals) / residuals.size,
        p=p, q=q, penalties=penalties, rows=design.rows, eps_hat=eps_hat,
        step1_coefficients=s1.coefficients.copy(),
        converged=bool(s1.converged and sol.converged),
        iterations=s1.iterations + (sol.iterations if q else 0),
        kkt_violation=sol.kkt_violation,
    )
    return fit, (s1.coefficients, b)


def fit_regar(ds, p, penalties, start=None, mask=None, options=None):
    """Regression with ``p`` lagged responses (no MA block).

    ``penalties`` may carry an MA block; it is ignored. The step's
    residuals are kept in ``fit.eps_hat`` (zero before the effective sample).
    """
    if not isinstance(penalties, PenaltyConfig):
        raise InputError("penalties must be a PenaltyConfig")
    pen = penalties.restrict(0)
    fit, _ = _two_step(ds, p, 0, pen, start=start, mask=mask, options=options)
    return fit


def fit_regarma(ds, p, q, penalties, start=None, mask=None, options=None, refresh_steps=0):
    """Two-step REGARMA(p, q) fit at fixed penalties.

    Parameters
    ----------
    ds : TimeSeriesDataset
        Standardized data.
    p, q : int
    penalties : PenaltyConfig
        Block weights of shape ``(r, p, q)``.
    start : int, optional
        First effective time index of step 2 (default ``p + q``). Step 1 then
        starts ``q`` earlier so every MA lag is a genuine residual.
    mask : array_like of bool, optional
        Time indices available for fitting; rows whose lag window touches a
        masked index are dropped (used by blocked cross-validation).
    refresh_steps : int
        Extra MA-refresh iterations after step 2. Zero gives exactly the
        two-step estimator.
    """
    fit, _ = _two_step(ds, p, q, penalties, start=start, mask=mask, options=options,
                       refresh_steps=refresh_steps)
    return fit


def compute_adaptive_weights(pilot, base, exponent=1.0, cap=DEFAULT_CAP):
    """Per-coefficient weights ``base_j / |pilot_j| ** exponent``, at most ``cap``.

    A zero pilot coefficient gets weight ``cap`` (or ``base_j`` if that is
    smaller, so a zero base penalty stays zero).
    """
    if base.shape != (pilot.r, pilot.p, pilot.q):
        raise DimensionMismatchError(
            f"base penalties {base.shape} do not match pilot shape {(pilot.r, pilot.p, pilot.q)}"
        )
    if exponent < 0 or not cap > 0:
        raise InputError("exponent must be >= 0 and cap > 0")

    def weigh(b, est):
        b = np.asarray(b, dtype=float)
        mag = np.abs(est) ** exponent
        out = np.zeros_like(b)
        pos = b > 0
        out[pos] = b[pos] / np.maximum(mag[pos], b[pos] / cap)
        return out

    return PenaltyConfig(weigh(base.lambda_weights, pilot.beta),
                         weigh(base.gamma_weights, pilot.phi),
                         weigh(base.tau_weights, pilot.theta))


def fit_adaptive_regarma(ds, p, q, base, exponent=1.0, cap=DEFAULT_CAP, pilot=None,
                         start=None, mask=None, options=None, refresh_steps=0):
    """Adaptive REGARMA: reweight by a non-adaptive pilot fit and refit.

    The pilot defaults to :func:`fit_regarma` at the ``base`` penalties on
    the same sample; pass ``pilot`` to use another (e.g. BIC-selected) one.
    Both steps of the refit use the reweighted penalties.
    """
    if pilot is None:
        pilot = fit_regarma(ds, p, q, base, start=start, mask=mask, options=options,
                            refresh_steps=refresh_steps)
    weights = compute_adaptive_weights(pilot, base, exponent, cap)
    fit = fit_regarma(ds, p, q, weights, start=start, mask=mask, options=options,
                      refresh_steps=refresh_steps)
    return replace(fit, adaptive=True, base_penalties=base)


def predict_one_step(fit, history_y, x_row, history_eps):
    """One-step-ahead prediction on the standardized scale.

    ``history_y`` and ``history_eps`` are time-ordered (most recent last)
    and must supply at least ``p`` and ``q`` values respectively.
    """
    hy = np.asarray(history_y, dtype=float).reshape(-1)
    he = np.asarray(history_eps, dtype=float).reshape(-1)
    x = np.asarray(x_row, dtype=float).reshape(-1)
    if hy.size < fit.p or he.size < fit.q:
        raise InsufficientHistoryError(
            f"need {fit.p} response lags and {fit.q} residual lags, got {hy.size} and {he.size}"
        )
    if x.size != fit.r:
        raise DimensionMismatchError(f"regressor row has {x.size} entries, expected {fit.r}")
    pred = float(x @ fit.beta)
    for j in range(1, fit.p + 1):
        pred += fit.phi[j - 1] * hy[-j]
    for i in range(1, fit.q + 1):
        pred += fit.theta[i - 1] * he[-i]
    return pred


def step1_residuals(fit, ds):
    """Residuals of the stored step-1 model over the whole series (zeros for t < p)."""
    T, p = ds.T, fit.p
    eps = np.zeros(T)
    if p >= T:
        return eps
    d1 = build_lag_design(ds, p, 0, start=p)
    eps[d1.rows] = d1.y_eff - d1.H @ fit.step1_coefficients
    return eps


def predict_series(fit, ds, rows=None):
    """One-step-ahead predictions at ``rows`` using observed lags in ``ds``.

    The MA lags are step-1 residuals recomputed on ``ds`` with the fitted
    step-1 coefficients; the default rows are ``p + q .. T - 1``.
    """
    eps = step1_residuals(fit, ds)
    if rows is None:
        rows = np.arange(fit.p + fit.q, ds.T)
    rows = np.asarray(rows, dtype=np.intp)
    # rows before p + q lack MA lags built from genuine residuals
    design = build_lag_design(ds, fit.p, fit.q, eps, rows=rows)
    return design.H @ fit.coefficients
