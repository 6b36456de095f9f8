"""scikit-learn style wrapper around penalty selection and the two-step fit."""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .data import TimeSeriesDataset, standardize
from .exceptions import ConfigError, DimensionMismatchError
from .selection import (
    default_penalty_grid,
    select_orders_method_a,
    select_orders_method_b,
    select_penalties,
)


class RegarmaRegressor(RegressorMixin, BaseEstimator):
    """Sparse regression with AR and MA lags of the response.

    Rows of ``X`` and ``y`` must be in time order. Data are standardized
    internally; coefficients are reported on both scales.

    Parameters
    ----------
    p, q : int
        AR and MA orders. With ``order_method`` set they are the maxima
        searched over instead.
    order_method : {None, "a", "b"}
        ``None`` fits the given orders; ``"a"`` searches every ``(p, q)``;
        ``"b"`` fits the maximal orders on a fixed window and reads the
        orders off the surviving lags.
    criterion : {"bic", "aic", "cv"}
    adaptive : bool
        Reweight the l1 penalty by a pilot fit.
    exponent : float
        Power applied to the pilot magnitudes in the adaptive weights.
    n_penalties : int
        Length of the default log-spaced penalty path.
    folds : int
        Number of contiguous blocks when ``criterion="cv"``.

    Attributes
    ----------
    fit_ : RegarmaFit
        Selected fit on the standardized scale.
    coef_ : ndarray of shape (n_features,)
        Regression coefficients in the units of ``X`` and ``y``.
    phi_, theta_ : ndarray
        AR and MA coefficients (scale free).
    orders_ : tuple of int
        Fitted ``(p, q)``.
    transform_ : StandardizationTransform
    selection_ : SelectionResult
    """

    def __init__(self, p=1, q=1, order_method=None, criterion="bic", adaptive=True,
                 exponent=1.0, n_penalties=50, folds=5):
        self.p = p
        self.q = q
        self.order_method = order_method
        self.criterion = criterion
        self.adaptive = adaptive
        self.exponent = exponent
        self.n_penalties = n_penalties
        self.folds = folds

    def fit(self, X, y):
        X, y = check_X_y(X, y, y_numeric=True, ensure_min_samples=2)
        self.n_features_in_ = X.shape[1]
        if self.p < 0 or self.q < 0:
            raise ConfigError("orders must be nonnegative")
        ds, self.transform_ = standardize(TimeSeriesDataset(y, X))
        kw = dict(kind=self.criterion, adaptive=self.adaptive, exponent=self.exponent)
        if self.order_method is None:
            grid = default_penalty_grid(ds, self.p, self.q, n_values=self.n_penalties)
            sel = select_penalties(ds, self.p, self.q, grid, folds=self.folds, **kw)
        elif self.order_method == "a":
            # one path per order pair, each on its own lambda_max
            sel = select_orders_method_a(ds, self.p, self.q, folds=self.folds, **kw)
        elif self.order_method == "b":
            start = self.p + self.q
            grid = default_penalty_grid(ds, self.p, self.q, n_values=self.n_penalties,
                                        start=start)
            sel = select_orders_method_b(ds, self.p, self.q, grid, start=start, **kw)
        else:
            raise ConfigError(f"unknown order_method {self.order_method!r}")
        fit = sel.best_fit
        self.selection_ = sel
        self.fit_ = fit
        self.orders_ = (fit.p, fit.q)
        self.coef_ = fit.beta * self.transform_.y_scale / self.transform_.x_scales
        self.phi_ = fit.phi.copy()
        self.theta_ = fit.theta.copy()
        return self

    def _std(self, X, y=None):
        tr = self.transform_
        Xs = (X - tr.x_means) / tr.x_scales
        ys = None if y is None else (y - tr.y_mean) / tr.y_scale
        return Xs, ys

    def predict(self, X, y=None):
        """One-step-ahead predictions for a contiguous segment.

        With ``y`` (the observed responses of the same rows) each prediction
        uses the observed lags, and lags reaching before the segment are
        set to the sample mean. Without ``y`` the lags are the model's own
        predictions and future innovations are taken as zero.
        """
        check_is_fitted(self, "fit_")
        X = check_array(X)
        if X.shape[1] != self.n_features_in_:
            raise DimensionMismatchError(
                f"X has {X.shape[1]} features, the model was fitted with {self.n_features_in_}")
        fit = self.fit_
        if y is None:
            Xs, _ = self._std(X)
            ys = np.zeros(X.shape[0])
            for t in range(X.shape[0]):
                v = Xs[t] @ fit.beta
                for j in range(1, min(fit.p, t) + 1):
                    v += fit.phi[j - 1] * ys[t - j]
                ys[t] = v
            return self.transform_.y_to_original(ys)
        y = check_array(y, ensure_2d=False).reshape(-1)
        if y.size != X.shape[0]:
            raise DimensionMismatchError(f"y has {y.size} rows, X has {X.shape[0]}")
        Xs, ys = self._std(X, y)
        pad = fit.p + fit.q
        H = np.vstack([np.zeros((pad, X.shape[1])), Xs])
        yy = np.r_[np.zeros(pad), ys]
        # step-1 residuals on the padded series, then the step-2 linear predictor
        eps = np.zeros(yy.size)
        for t in range(fit.p, yy.size):
            eps[t] = yy[t] - self._lin(fit.step1_coefficients, fit.p, 0, H, yy, eps, t)
        out = np.array([self._lin(fit.coefficients, fit.p, fit.q, H, yy, eps, t)
                        for t in range(pad, yy.size)])
        return self.transform_.y_to_original(out)

    @staticmethod
    def _lin(coef, p, q, H, yy, eps, t):
        v = H[t] @ coef[p + q:]
        for j in range(1, p + 1):
            v += coef[j - 1] * yy[t - j]
        for i in range(1, q + 1):
            v += coef[p + i - 1] * eps[t - i]
        return v

    def score(self, X, y, sample_weight=None):
        """R^2 of the one-step-ahead predictions given the observed ``y``."""
        from sklearn.metrics import r2_score

        return r2_score(y, self.predict(X, y), sample_weight=sample_weight)
