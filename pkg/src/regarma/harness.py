"""Seeded Monte Carlo experiments comparing REGARMA variants with the adaptive lasso.

Every replicate derives its own seed from ``(base_seed, cell, replicate)``
so results are reproducible regardless of execution order or worker count.
"""
from __future__ import annotations

import csv
import itertools
import json
import math
import os
import statistics
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .data import standardize
from .diagnostics import mspe_hat, realized_bound_inputs, remark2_bound, theorem5_bound
from .exceptions import ConfigError
from .fit import fit_adaptive_regarma, fit_regarma
from .lasso import PenaltyConfig
from .selection import default_penalty_grid, information_criterion, select_penalties
from .simulate import (
    SimulationConfig,
    SimulationTruth,
    generate_dataset,
    sample_sparse_beta,
    sample_stationary_coeffs,
    true_conditional_mean,
)

METHODS = ("adaptive_lasso", "adaptive_regarma", "regar", "regma")


@dataclass(frozen=True)
class ExperimentGrid:
    T_values: tuple = (50, 100, 150, 200, 250)
    r_values: tuple = (25, 75, 200, 300, 400)
    sigma_values: tuple = (0.5, 1.0, 1.5)
    zero_props: tuple = (0.9, 0.5, 0.1)
    replicates: int = 10
    base_seed: int = 0
    orders: tuple = (2, 1)
    n_penalties: int = 30
    cell_budget: float = math.inf

    def __post_init__(self):
        for name in ("T_values", "r_values", "sigma_values", "zero_props"):
            v = tuple(getattr(self, name))
            if not v:
                raise ConfigError(f"{name} must be nonempty")
            object.__setattr__(self, name, v)
        object.__setattr__(self, "orders", tuple(int(o) for o in self.orders))
        if self.replicates < 1:
            raise ConfigError("replicates must be at least 1")

    def cells(self):
        return list(itertools.product(self.T_values, self.r_values, self.sigma_values,
                                      self.zero_props))


@dataclass(frozen=True)
class ComparisonRow:
    method: str
    T: int
    r: int
    sigma: float
    zero_prop: float
    replicate: int
    seed: int
    p: int
    q: int
    n: int
    df: int
    mspe: float
    bic: float
    beta_mse: float
    support_recovery: float
    error: str = ""


def replicate_seed(base_seed, cell, replicate):
    """64-bit seed for one replicate, independent of scheduling."""
    state = np.random.SeedSequence([int(base_seed), int(cell), int(replicate)]).generate_state(2)
    return int((int(state[0]) << 32) | int(state[1]))


def worker_count():
    try:
        return max(1, int(os.environ.get("REGARMA_THREADS", "1")))
    except ValueError:
        raise ConfigError("REGARMA_THREADS must be an integer") from None


def _ordered_map(fn, tasks):
    """Map preserving task order; uses a process pool when REGARMA_THREADS > 1."""
    workers = min(worker_count(), len(tasks))
    if workers <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks))


def path_ratio(ds, p, q, start=None):
    """Lower end of the penalty path relative to ``lambda_max``.

    ``1e-4`` when the effective sample exceeds the design width, ``1e-2``
    otherwise: below that, wide designs approach interpolation, where BIC
    degenerates (``ln RSS -> -inf``) and coordinate descent crawls.
    """
    n = ds.T - (p + q if start is None else start)
    return 1e-4 if n > ds.r + p + q else 1e-2


def standardized_truth(truth, transform):
    """True coefficients expressed on the standardized scale of one sample."""
    beta = truth.beta0 * transform.x_scales / transform.y_scale
    return beta, truth.phi0, truth.theta0


def oracle_predictions(ds_raw, truth, transform, rows):
    """Standardized ``Y°`` at ``rows``: true-parameter predictions with true innovations."""
    return (true_conditional_mean(ds_raw, truth, rows) - transform.y_mean) / transform.y_scale


def _score(fit, method, cell, rep, seed, ds_raw, truth, transform, eval_rows):
    T, r, sigma, zp = cell
    beta_std, _, _ = standardized_truth(truth, transform)
    pos = np.searchsorted(fit.rows, eval_rows)
    oracle = oracle_predictions(ds_raw, truth, transform, eval_rows)
    support_ok = (np.abs(fit.beta) > 1e-10) == (beta_std != 0)
    return ComparisonRow(method, T, r, sigma, zp, rep, seed, fit.p, fit.q, fit.n, fit.df,
                         mspe_hat(fit.fitted[pos], oracle), information_criterion(fit, "bic"),
                         float(np.mean((fit.beta - beta_std) ** 2)), float(np.mean(support_ok)))


def _error_rows(cell, rep, seed, message):
    T, r, sigma, zp = cell
    return [ComparisonRow(m, T, r, sigma, zp, rep, seed, -1, -1, 0, 0, math.nan, math.nan,
                          math.nan, math.nan, message) for m in METHODS]


def run_replicate(cell, rep, seed, orders, n_penalties):
    """Fit the four methods on one simulated dataset, all on the window ``t >= p + q``."""
    T, r, sigma, zp = cell
    p, q = orders
    cfg = SimulationConfig(T=T, r=r, zero_proportion=zp, sigma=sigma, p=p, q=q, seed=seed)
    ds_raw, truth = generate_dataset(cfg)
    ds, tr = standardize(ds_raw)
    start = p + q
    shapes = {"adaptive_lasso": (0, 0), "adaptive_regarma": (p, q), "regar": (p, 0),
              "regma": (0, q)}
    eval_rows = np.arange(start, T)
    rows = []
    for method in METHODS:
        mp, mq = shapes[method]
        grid = default_penalty_grid(ds, mp, mq, n_values=n_penalties, start=start,
                                    ratio=path_ratio(ds, mp, mq, start))
        sel = select_penalties(ds, mp, mq, grid, "bic", adaptive=True, start=start)
        rows.append(_score(sel.best_fit, method, cell, rep, seed, ds_raw, truth, tr, eval_rows))
    return rows


def _run_cell(task):
    cell_index, cell, grid = task
    started = time.monotonic()
    out = []
    for rep in range(grid.replicates):
        seed = replicate_seed(grid.base_seed, cell_index, rep)
        if time.monotonic() - started > grid.cell_budget:
            out.extend(_error_rows(cell, rep, seed, "aborted: cell over time budget"))
            continue
        try:
            out.extend(run_replicate(cell, rep, seed, grid.orders, grid.n_penalties))
        except Exception as exc:  # recorded, never dropped
            out.extend(_error_rows(cell, rep, seed, f"error: {type(exc).__name__}: {exc}"))
    return out


def run_comparison(grid):
    """Adaptive lasso vs adaptive REGARMA / REGAR / REGMA over every cell and replicate.

    Penalties are BIC-selected per method and replicate; REGARMA is given
    the true orders. Rows come back in deterministic (cell, replicate,
    method) order.
    """
    tasks = [(i, cell, grid) for i, cell in enumerate(grid.cells())]
    return [row for rows in _ordered_map(_run_cell, tasks) for row in rows]


ROW_FIELDS = [f.name for f in ComparisonRow.__dataclass_fields__.values()]


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_rows(rows, path, fields=None):
    rows = list(rows)
    fields = fields or (ROW_FIELDS if rows and isinstance(rows[0], ComparisonRow) else list(rows[0]))
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(fields)
        for row in rows:
            d = asdict(row) if isinstance(row, ComparisonRow) else row
            w.writerow([_fmt(d[k]) for k in fields])


def cell_means(rows):
    """Mean of each metric per (method, T, r, sigma, zero_prop), skipping failed replicates."""
    keyf = lambda row: (row.method, row.T, row.r, row.sigma, row.zero_prop)  # noqa: E731
    groups = {}
    for row in rows:
        groups.setdefault(keyf(row), []).append(row)
    out = []
    for key in sorted(groups, key=lambda k: (METHODS.index(k[0]), *k[1:])):
        ok = [g for g in groups[key] if not g.error]
        mean = lambda a: float(np.mean([getattr(g, a) for g in ok])) if ok else math.nan  # noqa: E731
        out.append({"method": key[0], "T": key[1], "r": key[2], "sigma": key[3],
                    "zero_prop": key[4], "replicates": len(ok),
                    "failed": len(groups[key]) - len(ok), "mspe": mean("mspe"),
                    "bic": mean("bic"), "beta_mse": mean("beta_mse"),
                    "support_recovery": mean("support_recovery")})
    return out


FIGURES = {
    "figure_mspe_T_r.csv": ("T", "r", "mspe"),
    "figure_bic_T_r.csv": ("T", "r", "bic"),
    "figure_beta_mse_T_r.csv": ("T", "r", "beta_mse"),
    "figure_mspe_sigma.csv": ("sigma", "r", "T", "mspe"),
}


def _nanmean(v):
    v = [x for x in v if not math.isnan(x)]
    return float(np.mean(v)) if v else math.nan


def figure_tables(means):
    """Per-figure tables averaged over the axes a figure does not show."""
    out = {}
    for name, spec in FIGURES.items():
        *axes, metric = spec
        groups = {}
        for m in means:
            if m["method"] not in ("adaptive_lasso", "adaptive_regarma"):
                continue
            groups.setdefault((m["method"], *(m[a] for a in axes)), []).append(m[metric])
        out[name] = [{"method": k[0], **dict(zip(axes, k[1:])), metric: _nanmean(v)}
                     for k, v in sorted(groups.items(),
                                        key=lambda kv: (METHODS.index(kv[0][0]), *kv[0][1:]))]
    return out


def grid_to_dict(grid):
    d = asdict(grid)
    d["cell_budget"] = None if math.isinf(grid.cell_budget) else grid.cell_budget
    for k in ("T_values", "r_values", "sigma_values", "zero_props", "orders"):
        d[k] = list(d[k])
    return d


def grid_from_dict(d):
    d = dict(d)
    if d.get("cell_budget") is None:
        d["cell_budget"] = math.inf
    return ExperimentGrid(**d)


def write_bench(grid, rows, out_dir):
    """Tidy rows, per-cell means, per-figure tables and a manifest."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_rows(rows, out / "comparison.csv")
    means = cell_means(rows)
    write_rows(means, out / "comparison_means.csv")
    for name, table in figure_tables(means).items():
        write_rows(table, out / name)
    seeds = [{"cell": i, "T": c[0], "r": c[1], "sigma": c[2], "zero_prop": c[3],
              "replicate": k, "seed": replicate_seed(grid.base_seed, i, k)}
             for i, c in enumerate(grid.cells()) for k in range(grid.replicates)]
    manifest = {
        "grid": grid_to_dict(grid),
        "seeds": seeds,
        "methods": list(METHODS),
        "versions": {"regarma": __version__, "numpy": np.__version__},
        "aborted_or_failed": sum(1 for r in rows if r.error),
        "files": sorted(["comparison.csv", "comparison_means.csv", *FIGURES]),
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest


# --- bound validity ----------------------------------------------------------


@dataclass(frozen=True)
class BoundRow:
    T: int
    r: int
    sigma: float
    zero_prop: float
    replicate: int
    seed: int
    n: int
    mspe: float
    theorem5: float
    remark2: float

    @property
    def within_theorem5(self):
        return self.mspe <= self.theorem5

    @property
    def remark2_dominates(self):
        return self.remark2 >= self.theorem5


def bound_replicate(cell, seed, orders, n_penalties=30):
    """mspe_hat of the BIC-selected adaptive fit against both bounds at realized ``(K, M)``.

    ``sigma`` enters the bounds on the standardized scale, matching the
    scale of the fit and of the oracle predictions.
    """
    T, r, sigma, zp = cell
    p, q = orders
    cfg = SimulationConfig(T=T, r=r, zero_proportion=zp, sigma=sigma, p=p, q=q, seed=seed)
    ds_raw, truth = generate_dataset(cfg)
    ds, tr = standardize(ds_raw)
    # the default path (down to 1e-4 lambda_max), not the comparison floor: a
    # floored path in wide designs yields fits whose l1 norms fall far below the
    # truth's, outside the regime the bound speaks to
    grid = default_penalty_grid(ds, p, q, n_values=n_penalties)
    fit = select_penalties(ds, p, q, grid, "bic", adaptive=True).best_fit
    mspe = mspe_hat(fit.fitted, oracle_predictions(ds_raw, truth, tr, fit.rows))
    b = realized_bound_inputs(fit, ds, sigma / tr.y_scale)
    return fit.n, mspe, theorem5_bound(b), remark2_bound(b)


def _bound_cell(task):
    cell_index, cell, grid = task
    out = []
    for rep in range(grid.replicates):
        seed = replicate_seed(grid.base_seed, cell_index, rep)
        n, mspe, t5, r2 = bound_replicate(cell, seed, grid.orders, grid.n_penalties)
        out.append(BoundRow(*cell, rep, seed, n, mspe, t5, r2))
    return out


def run_bound_check(grid):
    """Realized-norm bound check for every (cell, replicate) of ``grid``."""
    tasks = [(i, cell, grid) for i, cell in enumerate(grid.cells())]
    return [row for rows in _ordered_map(_bound_cell, tasks) for row in rows]


# --- theory probes -----------------------------------------------------------


@dataclass(frozen=True)
class DGP:
    """Fixed-shape generating process for the theory probes."""

    r: int = 10
    zero_proportion: float = 0.9
    sigma: float = 0.5
    p: int = 1
    q: int = 1
    all_positive: bool = False
    # smallest nonzero regression magnitude (beta-min margin)
    min_abs: float = 0.05

    def truth(self, seed):
        rng = np.random.default_rng([int(seed), 7919])
        beta = sample_sparse_beta(self.r, self.zero_proportion, rng, dead_zone=self.min_abs)
        if self.all_positive:
            beta = np.abs(beta)
        return SimulationTruth(beta, sample_stationary_coeffs(self.p, rng),
                               sample_stationary_coeffs(self.q, rng), self.sigma)

    def sample(self, T, seed, truth=None):
        cfg = SimulationConfig(T=T, r=self.r, zero_proportion=self.zero_proportion,
                               sigma=self.sigma, p=self.p, q=self.q, seed=seed)
        return generate_dataset(cfg, truth=truth)


def _rate_penalty(ds, p, q, n, scale):
    """Base penalty ``scale * n**(1/4)`` on the raw-RSS scale (``o(sqrt n)``, diverging)."""
    return PenaltyConfig.uniform(ds.r, p, q, scale * n ** 0.25)


def _support_rates(coef, truth_coef):
    z = truth_coef == 0
    est_zero = np.abs(coef) <= 1e-10
    return int(np.sum(est_zero & z)), int(np.sum(z)), int(np.sum(~est_zero & ~z)), int(np.sum(~z))


@dataclass(frozen=True)
class OracleRow:
    T: int
    replicates: int
    zero_recovery: float
    nonzero_coverage: float
    zero_recovery_nonadaptive: float
    nonzero_coverage_nonadaptive: float


def run_oracle_experiment(T_values=(100, 200, 400), replicates=100, dgp=DGP(), base_seed=0,
                          penalty_scale=1.0):
    """Zero-recovery and nonzero-coverage rates of adaptive REGARMA as T grows.

    Each replicate draws a fresh truth and dataset. The base penalty grows as
    ``n**(1/4)``, so pilot-zero coordinates get a penalty diverging faster
    than ``sqrt(n)`` through the adaptive weights while the others stay
    ``o(sqrt(n))``. The non-adaptive fit at the same base penalty is
    reported alongside on the same seeds.
    """
    out = []
    for ti, T in enumerate(T_values):
        acc = np.zeros(8, dtype=int)
        for rep in range(replicates):
            seed = replicate_seed(base_seed, ti, rep)
            truth = dgp.truth(seed)
            ds_raw, truth = dgp.sample(T, seed, truth)
            ds, _ = standardize(ds_raw)
            base = _rate_penalty(ds, dgp.p, dgp.q, T - dgp.p - dgp.q, penalty_scale)
            plain = fit_regarma(ds, dgp.p, dgp.q, base)
            adapt = fit_adaptive_regarma(ds, dgp.p, dgp.q, base, pilot=plain)
            tc = np.concatenate([truth.phi0, truth.theta0, truth.beta0])
            acc[:4] += _support_rates(adapt.coefficients, tc)
            acc[4:] += _support_rates(plain.coefficients, tc)
        ratio = lambda a, b: float(a / b) if b else math.nan  # noqa: E731
        out.append(OracleRow(T, replicates, ratio(acc[0], acc[1]), ratio(acc[2], acc[3]),
                             ratio(acc[4], acc[5]), ratio(acc[6], acc[7])))
    return out


@dataclass(frozen=True)
class BiasResult:
    mean_bias_lasso: float
    mean_bias_adaptive: float
    se_lasso: float
    se_adaptive: float
    replicates: int

    @property
    def t_lasso(self):
        return self.mean_bias_lasso / self.se_lasso if self.se_lasso > 0 else -math.inf


BIAS_DGP = DGP(r=5, zero_proportion=0.0, sigma=0.5, p=0, q=0, all_positive=True, min_abs=0.25)


def run_bias_experiment(replicates=200, dgp=BIAS_DGP, T=200, base_seed=0, penalty="rate",
                        fit_orders=(1, 1), scale=1.0, fraction=0.5, n_penalties=30):
    """Mean of ``beta_hat - beta°`` (standardized scale) for lasso-type and adaptive fits.

    The truth is fixed across replicates and has every regression
    coefficient positive; by default it has no AR or MA dynamics while the
    fit still carries ``fit_orders`` lags. Penalty modes:

    ``"rate"``
        Non-adaptive penalty ``scale * sqrt(n)`` (the regime with a
        nonvanishing shrinkage bias) against an adaptive fit with base
        ``scale * n**(1/4)`` (the oracle regime), pilot at that base.
    ``"bic"``
        Each variant's penalty selected by BIC.
    ``"fixed"``
        ``fraction * lambda_max`` for both, non-adaptive fit as pilot.

    Returns per-replicate means averaged over coordinates and their
    Monte Carlo standard errors.
    """
    truth = dgp.truth(base_seed)
    if np.any(truth.beta0 <= 0):
        raise ConfigError("bias experiment needs an all-positive regression truth")
    if penalty not in ("rate", "bic", "fixed"):
        raise ConfigError(f"unknown penalty mode {penalty!r}")
    p, q = fit_orders
    b_lasso, b_adapt = [], []
    for rep in range(replicates):
        seed = replicate_seed(base_seed, 0, rep)
        ds_raw, tr_full = dgp.sample(T, seed, truth)
        ds, tr = standardize(ds_raw)
        beta_std, _, _ = standardized_truth(tr_full, tr)
        if penalty == "rate":
            n = T - p - q
            plain = fit_regarma(ds, p, q, PenaltyConfig.uniform(ds.r, p, q, scale * math.sqrt(n)))
            adapt = fit_adaptive_regarma(ds, p, q, _rate_penalty(ds, p, q, n, scale))
        else:
            grid = default_penalty_grid(ds, p, q, n_values=n_penalties)
            if penalty == "bic":
                plain = select_penalties(ds, p, q, grid, "bic", adaptive=False).best_fit
                adapt = select_penalties(ds, p, q, grid, "bic", adaptive=True).best_fit
            else:
                base = PenaltyConfig.uniform(ds.r, p, q, fraction * grid[0][0])
                plain = fit_regarma(ds, p, q, base)
                adapt = fit_adaptive_regarma(ds, p, q, base, pilot=plain)
        b_lasso.append(float(np.mean(plain.beta - beta_std)))
        b_adapt.append(float(np.mean(adapt.beta - beta_std)))
    se = lambda v: float(np.std(v, ddof=1) / np.sqrt(len(v))) if len(v) > 1 else math.nan  # noqa: E731
    return BiasResult(float(np.mean(b_lasso)), float(np.mean(b_adapt)), se(b_lasso),
                      se(b_adapt), replicates)


@dataclass(frozen=True)
class NormalitySummary:
    replicates: int
    sufficient: bool
    coordinates: tuple = ()
    skewness: float = math.nan
    excess_kurtosis: float = math.nan
    qq_correlation: float = math.nan
    per_coordinate_sd: tuple = ()


def normal_qq_correlation(x):
    """Correlation between sorted data and standard-normal plotting positions."""
    x = np.sort(np.asarray(x, dtype=float))
    m = x.size
    nd = statistics.NormalDist()
    # Filliben-style plotting positions
    probs = (np.arange(1, m + 1) - 0.375) / (m + 0.25)
    z = np.array([nd.inv_cdf(float(pr)) for pr in probs])
    return float(np.corrcoef(x, z)[0, 1])


def run_normality_probe(replicates=500, dgp=DGP(r=5, zero_proportion=0.6, p=1, q=1),
                        T=400, base_seed=0, n_penalties=30):
    """Distribution of ``sqrt(n) (estimate - truth)`` on the true support.

    The truth is fixed; each replicate is an independent sample with
    BIC-selected adaptive penalties. Each coordinate is studentized by its
    Monte Carlo mean and standard deviation before pooling, so coordinates
    with different asymptotic variances can share one normality summary.
    """
    if replicates < 3:
        return NormalitySummary(replicates, False)
    truth = dgp.truth(base_seed)
    support = None
    draws = []
    for rep in range(replicates):
        seed = replicate_seed(base_seed, 1, rep)
        ds_raw, tr_full = dgp.sample(T, seed, truth)
        ds, tr = standardize(ds_raw)
        beta_std, phi0, theta0 = standardized_truth(tr_full, tr)
        true_coef = np.concatenate([phi0, theta0, beta_std])
        if support is None:
            support = np.flatnonzero(true_coef != 0)
        grid = default_penalty_grid(ds, dgp.p, dgp.q, n_values=n_penalties)
        fit = select_penalties(ds, dgp.p, dgp.q, grid, "bic", adaptive=True).best_fit
        draws.append(np.sqrt(fit.n) * (fit.coefficients[support] - true_coef[support]))
    D = np.asarray(draws)
    sd = D.std(axis=0, ddof=1)
    Z = ((D - D.mean(axis=0)) / np.where(sd > 0, sd, 1.0)).ravel()
    m3 = float(np.mean(Z ** 3))
    m4 = float(np.mean(Z ** 4))
    return NormalitySummary(replicates, True, tuple(int(s) for s in support), m3, m4 - 3.0,
                            normal_qq_correlation(Z), tuple(float(s) for s in sd))
