"""Weighted l1-penalized least squares by cyclic coordinate descent.

The objective is the raw residual sum of squares plus a per-coefficient
weighted l1 norm (no ``1/2n`` factor)::

    ||y - H b||^2 + sum_j w_j |b_j|

so a coordinate update is a soft-threshold at ``w_j / 2`` of the partial
residual correlation, divided by the squared column norm.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numba
import numpy as np

from .exceptions import DimensionMismatchError, InputError


@dataclass(frozen=True)
class PenaltyConfig:
    """Per-coefficient penalty weights for the regression, AR and MA blocks."""

    lambda_weights: np.ndarray
    gamma_weights: np.ndarray
    tau_weights: np.ndarray

    def __post_init__(self):
        for name in ("lambda_weights", "gamma_weights", "tau_weights"):
            w = np.asarray(getattr(self, name), dtype=float).reshape(-1)
            if not np.all(np.isfinite(w)) or np.any(w < 0):
                raise InputError(f"{name} must be finite and nonnegative")
            w.setflags(write=False)
            object.__setattr__(self, name, w)

    @classmethod
    def uniform(cls, r, p, q, lam, gam=None, tau=None):
        """Same scalar penalty within each block (``gam``/``tau`` default to ``lam``)."""
        gam = lam if gam is None else gam
        tau = lam if tau is None else tau
        return cls(np.full(r, float(lam)), np.full(p, float(gam)), np.full(q, float(tau)))

    @property
    def shape(self):
        return self.lambda_weights.size, self.gamma_weights.size, self.tau_weights.size

    def stacked(self):
        """Weights in design order: AR | MA | X."""
        return np.concatenate([self.gamma_weights, self.tau_weights, self.lambda_weights])

    @classmethod
    def from_stacked(cls, w, r, p, q):
        w = np.asarray(w, dtype=float)
        return cls(w[p + q:p + q + r], w[:p], w[p:p + q])

    def restrict(self, q=0):
        """Drop the MA block (used for the step-1 AR-only solve)."""
        return PenaltyConfig(self.lambda_weights, self.gamma_weights, self.tau_weights[:q])

    def to_dict(self):
        return {
            "lambda": [float(v) for v in self.lambda_weights],
            "gamma": [float(v) for v in self.gamma_weights],
            "tau": [float(v) for v in self.tau_weights],
        }

    @classmethod
    def from_dict(cls, d):
        return cls(d["lambda"], d["gamma"], d["tau"])


@dataclass(frozen=True)
class SolverOptions:
    tol: float = 1e-7
    max_iter: int = 10_000
    kkt_tol: float = 1e-5
    warm_start: np.ndarray | None = field(default=None, repr=False)
    # recompute the objective after each sweep and fail on any increase
    debug: bool = False


@dataclass(frozen=True)
class SolveResult:
    coefficients: np.ndarray
    objective: float
    iterations: int
    converged: bool
    kkt_violation: float


def _as_arrays(design, penalties):
    if isinstance(penalties, PenaltyConfig):
        r, p, q = penalties.shape
        if (r, p, q) != (design.r, design.p, design.q):
            raise DimensionMismatchError(
                f"penalty block widths {(r, p, q)} do not match design {(design.r, design.p, design.q)}"
            )
        w = penalties.stacked()
    else:
        w = np.asarray(penalties, dtype=float).reshape(-1)
        if w.size != design.H.shape[1]:
            raise DimensionMismatchError(f"{w.size} penalties for {design.H.shape[1]} columns")
    # column-major so each coordinate update reads a contiguous column
    return np.asfortranarray(design.H, dtype=float), np.ascontiguousarray(design.y_eff, dtype=float), w


def objective_value(H, y, w, b):
    res = y - H @ b
    return float(res @ res + np.sum(w * np.abs(b)))


@numba.njit(cache=True)
def _coldot(H, j, v):
    s = 0.0
    for i in range(H.shape[0]):
        s += H[i, j] * v[i]
    return s


@numba.njit(cache=True)
def _residual(H, y, b):
    res = y.copy()
    for j in range(H.shape[1]):
        if b[j] != 0.0:
            for i in range(H.shape[0]):
                res[i] -= H[i, j] * b[j]
    return res


@numba.njit(cache=True)
def _kkt(H, y, w, b):
    res = _residual(H, y, b)
    worst = 0.0
    for j in range(H.shape[1]):
        g = 2.0 * _coldot(H, j, res)
        if b[j] != 0.0:
            v = abs(-g + w[j] * np.sign(b[j]))
        else:
            v = max(0.0, abs(g) - w[j])
        if v > worst:
            worst = v
    return worst


@numba.njit(cache=True)
def _cd(H, y, w, b, tol, max_iter, kkt_tol, debug):
    n, k = H.shape
    sq = np.empty(k)
    for j in range(k):
        sq[j] = _coldot(H, j, H[:, j])
    for j in range(k):
        if sq[j] == 0.0 and b[j] != 0.0:
            b[j] = 0.0
    res = _residual(H, y, b)
    prev = np.inf
    it = 0
    converged = False
    while it < max_iter:
        it += 1
        max_delta = 0.0
        for j in range(k):
            if sq[j] == 0.0:
                continue
            old = b[j]
            rho = _coldot(H, j, res) + sq[j] * old
            half = 0.5 * w[j]
            if rho > half:
                new = (rho - half) / sq[j]
            elif rho < -half:
                new = (rho + half) / sq[j]
            else:
                new = 0.0
            delta = new - old
            if delta != 0.0:
                for i in range(n):
                    res[i] -= delta * H[i, j]
                b[j] = new
                if abs(delta) > max_delta:
                    max_delta = abs(delta)
        if debug:
            obj = res @ res + np.sum(w * np.abs(b))
            if obj > prev + 1e-10 * max(1.0, abs(prev)):
                return it, False, -1.0
            prev = obj
        if max_delta < tol:
            # refresh the residual to shed accumulated rounding before certifying
            res = _residual(H, y, b)
            if _kkt(H, y, w, b) <= kkt_tol:
                converged = True
                break
    return it, converged, 0.0


def solve_weighted_lasso(design, penalties, options=None):
    """Minimize ``RSS + sum_j w_j |b_j|`` over the columns of ``design.H``.

    Parameters
    ----------
    design : LagDesign
    penalties : PenaltyConfig or array_like
        Either block weights matching the design, or a flat weight vector
        already in design column order.
    options : SolverOptions, optional

    Returns
    -------
    SolveResult
        ``converged`` is False (not an exception) when ``max_iter`` sweeps
        ran out before the KKT certificate held.
    """
    opts = options or SolverOptions()
    H, y, w = _as_arrays(design, penalties)
    k = H.shape[1]
    if design.n < 1:
        raise DimensionMismatchError("design has no rows")
    if opts.warm_start is not None:
        b = np.array(opts.warm_start, dtype=float).reshape(-1)
        if b.size != k:
            raise DimensionMismatchError(f"warm start has {b.size} entries, expected {k}")
    else:
        b = np.zeros(k)
    if k == 0:
        obj = float(y @ y)
        return SolveResult(b, obj, 1, True, 0.0)
    it, converged, flag = _cd(H, y, w, b, float(opts.tol), int(opts.max_iter),
                              float(opts.kkt_tol), bool(opts.debug))
    if flag < 0:
        raise AssertionError("coordinate descent objective increased within a sweep")
    return SolveResult(b, objective_value(H, y, w, b), int(it), bool(converged),
                       float(_kkt(H, y, w, b)))


def kkt_residual(design, penalties, coefficients):
    """Largest violation of the lasso subgradient optimality conditions.

    For a nonzero coefficient the gradient of the RSS must cancel the
    penalty exactly; for a zero coefficient its magnitude must not exceed
    the penalty weight.
    """
    H, y, w = _as_arrays(design, penalties)
    b = np.asarray(coefficients, dtype=float).reshape(-1)
    if b.size != H.shape[1]:
        raise DimensionMismatchError(f"{b.size} coefficients for {H.shape[1]} columns")
    if b.size == 0:
        return 0.0
    return float(_kkt(H, y, w, np.ascontiguousarray(b)))


def lambda_max(design, weights=None):
    """Smallest common penalty scale at which the all-zero vector is optimal.

    With relative weights ``weights`` (default ones) this is
    ``max_j |2 h_j' y| / weights_j`` over columns with positive weight.
    """
    g = np.abs(2.0 * (design.H.T @ design.y_eff))
    if weights is None:
        return float(g.max()) if g.size else 0.0
    weights = np.asarray(weights, dtype=float)
    m = weights > 0
    return float(np.max(g[m] / weights[m])) if m.any() else 0.0
