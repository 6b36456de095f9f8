"""Command-line entry point: ``regarma {fit,select,simulate,bench,bounds}``.

Exit codes: 0 success, 2 input/configuration error, 3 numerical failure
(or, under ``--strict``, aborted bench cells and bound violations).
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .data import StandardizationTransform, read_csv, standardize
from .diagnostics import (
    compute_metrics,
    model_label,
    mspe_hat,
    realized_bound_inputs,
    remark2_bound,
    theorem5_bound,
    write_acf,
    write_metrics,
)
from .exceptions import ConfigError, DimensionMismatchError, InputError, NumericalError
from .fit import RegarmaFit, predict_series
from .selection import (
    default_penalty_grid,
    select_orders_method_a,
    select_orders_method_b,
    select_penalties,
    write_criterion_table,
)

log = logging.getLogger("regarma")

EXIT_OK, EXIT_INPUT, EXIT_NUMERICAL = 0, 2, 3
ACF_LAGS = 20


def _dump(obj, path):
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _load_input(args):
    path = Path(args.input)
    if not path.is_file():
        raise InputError(f"input file {str(path)!r} does not exist")
    return read_csv(path, args.response)


def _out_dir(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _check_finite(fit, what):
    if not (np.isfinite(fit.objective) and np.all(np.isfinite(fit.coefficients))):
        raise NumericalError(f"{what} produced non-finite coefficients")
    if not fit.converged:
        log.warning("%s: solver stopped before the optimality check held (KKT %.3g)",
                    what, fit.kkt_violation)


def _orders(args):
    """(Pmax, Qmax) for the search, or fixed (p, q) when no order method is given."""
    if args.order_method:
        if args.pmax is None or args.qmax is None:
            raise ConfigError("--order-method needs --pmax and --qmax")
        return args.pmax, args.qmax
    if args.p is None or args.q is None:
        raise ConfigError("give --p and --q, or --order-method with --pmax/--qmax")
    return args.p, args.q


def _select(ds, args):
    P, Q = _orders(args)
    kw = dict(kind=args.criterion, adaptive=args.adaptive)
    if args.order_method == "a":
        return select_orders_method_a(ds, P, Q, folds=args.folds, **kw), P + Q
    if args.order_method == "b":
        grid = default_penalty_grid(ds, P, Q, n_values=args.n_penalties, start=P + Q)
        return select_orders_method_b(ds, P, Q, grid, start=P + Q, **kw), P + Q
    grid = default_penalty_grid(ds, P, Q, n_values=args.n_penalties)
    return select_penalties(ds, P, Q, grid, folds=args.folds, **kw), P + Q


def _refit(ds, p, q, start, args):
    """BIC-selected (adaptive) fit of one model shape on the window ``t >= start``."""
    grid = default_penalty_grid(ds, p, q, n_values=args.n_penalties, start=start)
    kind = "bic" if args.criterion == "cv" else args.criterion
    return select_penalties(ds, p, q, grid, kind, adaptive=args.adaptive, start=start).best_fit


def cmd_fit(args):
    ds_raw = _load_input(args)
    ds, transform = standardize(ds_raw)
    sel, start = _select(ds, args)
    p, q = sel.best_orders
    # refit the chosen orders (and the three reference shapes) on the common window
    models = [(0, 0), (p, 0), (0, q), (p, q)]
    fits = [_refit(ds, mp, mq, start, args) for mp, mq in models]
    for f in fits:
        _check_finite(f, model_label(f))
    final = fits[-1]
    out = _out_dir(args)
    doc = final.to_dict()
    doc["transform"] = transform.to_dict()
    doc["response"] = ds_raw.response_name
    doc["columns"] = list(ds_raw.column_names)
    doc["selected_orders"] = [p, q]
    _dump(doc, out / "fit.json")
    write_metrics([compute_metrics(f, model_label(f)) for f in fits], out / "metrics.csv")
    write_criterion_table(sel, out / "criterion_table.csv")
    max_lag = min(ACF_LAGS, final.n - 1)
    if max_lag >= 1:
        write_acf({model_label(f): f.residuals for f in fits}, max_lag, out / "residual_acf.csv")
    print(f"selected {model_label(final)}: BIC {compute_metrics(final).bic:.4f}, "
          f"{final.df} nonzero, n = {final.n}")
    return EXIT_OK


def cmd_select(args):
    ds, _ = standardize(_load_input(args))
    sel, _ = _select(ds, args)
    _check_finite(sel.best_fit, "selected fit")
    out = _out_dir(args)
    write_criterion_table(sel, out / "criterion_table.csv")
    row = sel.best_row
    _dump({"orders": list(sel.best_orders), "criterion": sel.criterion_kind.value,
           "scales": list(row.scales), "value": row.criterion,
           "penalties": sel.best_penalties.to_dict()}, out / "selection.json")
    print(f"selected orders {sel.best_orders}, scales {row.scales}, "
          f"{sel.criterion_kind.value} {row.criterion:.4f}")
    return EXIT_OK


def cmd_simulate(args):
    from .simulate import SimulationConfig, generate_dataset, write_simulation

    if args.seed is None:
        raise ConfigError("--seed is required")
    cfg = SimulationConfig(T=args.T, r=args.r, zero_proportion=args.zero_proportion,
                           sigma=args.sigma, p=args.p if args.p is not None else 1,
                           q=args.q if args.q is not None else 1, seed=args.seed)
    ds, truth = generate_dataset(cfg)
    write_simulation(ds, truth, cfg, _out_dir(args))
    return EXIT_OK


def cmd_bench(args):
    from .harness import ExperimentGrid, grid_from_dict, run_comparison, write_bench

    if args.manifest:
        grid = grid_from_dict(json.loads(Path(args.manifest).read_text())["grid"])
    else:
        if args.seed is None:
            raise ConfigError("bench needs --seed (or --manifest) so runs are reproducible")
        grid = ExperimentGrid(T_values=tuple(args.T_values), r_values=tuple(args.r_values),
                              sigma_values=tuple(args.sigma_values),
                              zero_props=tuple(args.zero_props), replicates=args.replicates,
                              base_seed=args.seed, n_penalties=args.n_penalties,
                              cell_budget=args.cell_budget)
    rows = run_comparison(grid)
    manifest = write_bench(grid, rows, _out_dir(args))
    bad = manifest["aborted_or_failed"]
    print(f"{len(rows)} rows, {bad} failed or aborted")
    if bad and args.strict:
        return EXIT_NUMERICAL
    return EXIT_OK


def cmd_bounds(args):
    doc = json.loads(Path(args.fit).read_text())
    fit = RegarmaFit.from_dict(doc)
    ds_raw = _load_input(args)
    if ds_raw.r != fit.r:
        raise DimensionMismatchError(f"dataset has {ds_raw.r} regressors, fit has {fit.r}")
    if fit.rows.size and fit.rows.max() >= ds_raw.T:
        raise DimensionMismatchError("fit rows extend past the end of the dataset")
    transform = (StandardizationTransform.from_dict(doc["transform"]) if "transform" in doc
                 else standardize(ds_raw)[1])
    ds = transform.apply(ds_raw)
    mspe = None
    if args.truth:
        from .harness import oracle_predictions
        from .simulate import SimulationTruth

        truth = SimulationTruth.from_dict(json.loads(Path(args.truth).read_text())["truth"])
        sigma = truth.sigma / transform.y_scale
        pred = predict_series(fit, ds, rows=fit.rows)
        mspe = mspe_hat(pred, oracle_predictions(ds_raw, truth, transform, fit.rows))
    else:
        sigma = args.sigma if args.sigma is not None else float(np.sqrt(fit.sigma2_hat))
    b = realized_bound_inputs(fit, ds, sigma)
    t5, r2 = theorem5_bound(b), remark2_bound(b)
    lines = [
        f"model            {model_label(fit)}",
        f"n                {b.n}",
        f"sigma            {sigma:.6g} (standardized scale)",
        f"K (beta,phi,th)  {', '.join(f'{k:.6g}' for k in b.per_block_K)}",
        f"M (X,AR,MA)      {', '.join(f'{m:.6g}' for m in b.per_block_M)}",
        f"K_max M_max K*   {b.K_max:.6g} {b.M_max:.6g} {b.K_star:.6g}",
        f"theorem5 bound   {t5!r}",
        f"remark2 bound    {r2!r}",
    ]
    if fit.p == 0 and fit.q == 0:
        lines.append("note             p = q = 0: bound reduces to the plain lasso rate")
    if mspe is not None:
        lines.append(f"mspe_hat         {mspe!r}")
    print("\n".join(lines))
    if args.strict and mspe is not None and mspe > t5:
        print("bound violated: mspe_hat exceeds the theorem5 bound", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


def _floats(s):
    return [float(v) for v in s.split(",")]


def _ints(s):
    return [int(v) for v in s.split(",")]


def build_parser():
    ap = argparse.ArgumentParser(prog="regarma", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(sp, data=True):
        if data:
            sp.add_argument("--input", required=True, help="CSV with a header row")
            sp.add_argument("--response", required=True, help="response column name")
        sp.add_argument("--out", default=".", help="output directory (created if absent)")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--strict", action="store_true")

    def model(sp):
        sp.add_argument("--p", type=int)
        sp.add_argument("--q", type=int)
        sp.add_argument("--pmax", type=int)
        sp.add_argument("--qmax", type=int)
        sp.add_argument("--order-method", choices=["a", "b"])
        sp.add_argument("--criterion", choices=["bic", "aic", "cv"], default="bic")
        sp.add_argument("--folds", type=int, default=5)
        sp.add_argument("--adaptive", action=argparse.BooleanOptionalAction, default=True)
        sp.add_argument("--n-penalties", type=int, default=50)

    for name, fn in (("fit", cmd_fit), ("select", cmd_select)):
        sp = sub.add_parser(name)
        common(sp)
        model(sp)
        sp.set_defaults(func=fn)

    sp = sub.add_parser("simulate")
    common(sp, data=False)
    sp.add_argument("--T", type=int, default=100)
    sp.add_argument("--r", type=int, default=25)
    sp.add_argument("--zero-proportion", type=float, default=0.5)
    sp.add_argument("--sigma", type=float, default=0.5)
    sp.add_argument("--p", type=int)
    sp.add_argument("--q", type=int)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("bench")
    common(sp, data=False)
    sp.add_argument("--manifest", help="rerun the grid recorded in a previous manifest.json")
    sp.add_argument("--T-values", type=_ints, default=[100])
    sp.add_argument("--r-values", type=_ints, default=[25])
    sp.add_argument("--sigma-values", type=_floats, default=[0.5])
    sp.add_argument("--zero-props", type=_floats, default=[0.5])
    sp.add_argument("--replicates", type=int, default=10)
    sp.add_argument("--n-penalties", type=int, default=30)
    sp.add_argument("--cell-budget", type=float, default=float("inf"),
                    help="seconds per cell before remaining replicates are aborted")
    sp.set_defaults(func=cmd_bench)

    sp = sub.add_parser("bounds")
    common(sp)
    sp.add_argument("--fit", required=True, help="fit.json written by 'regarma fit'")
    sp.add_argument("--truth", help="truth.json written by 'regarma simulate'")
    sp.add_argument("--sigma", type=float, help="noise level on the standardized scale")
    sp.set_defaults(func=cmd_bounds)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (NumericalError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (OSError, json.JSONDecodeError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
