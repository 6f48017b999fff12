"""Command-line interface.

    l0kit simulate --trials 100 --out results/
    l0kit path --out paths/
    l0kit shrinkage --theta 0.1 --sigma-beta 1,3,10 --out shrink/
    l0kit fit --input diabetes.csv --response y --out diabetes/
    l0kit verify

Exit status: 0 on success, 1 on a runtime failure, 2 on a usage error.
"""

from __future__ import annotations

import argparse
import dataclasses
import os
import sys
from pathlib import Path

import numpy as np

from . import experiments as ex
from .csvio import read_csv_dataset, write_table
from .errors import L0KitError
from .quadrature import quadrature_posterior_means
from .shrinkage import PriorSpec, Slab, check_monotone_posterior_mean, phi_build, posterior_mean

EXIT_OK, EXIT_RUNTIME, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


# --------------------------------------------------------------------------
# argument parsing
# --------------------------------------------------------------------------


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def _seed(text: str) -> int:
    v = int(text)
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _float_list(text: str) -> list:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _method_list(allowed):
    def parse(text: str) -> list:
        items = [t.strip().lower() for t in text.split(",") if t.strip()]
        bad = [m for m in items if m not in allowed]
        if bad or not items:
            raise argparse.ArgumentTypeError(f"methods must be drawn from {', '.join(allowed)}")
        return items
    return parse


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=_seed, default=0, help="master seed (default 0)")
    p.add_argument("--out", type=Path, default=Path("."), help="output directory")
    p.add_argument("--threads", type=_positive_int, default=None,
                   help="worker processes (falls back to $L0KIT_THREADS, then 1)")
    p.add_argument("--verify", action="store_true", help="run the matching oracle check on the outputs")
    p.add_argument("--gnuplot", action="store_true", help="also write a gnuplot script for the CSVs")


def _design_flags(p: argparse.ArgumentParser) -> None:
    d = ex.ExperimentConfig()
    p.add_argument("--n", type=_positive_int, default=d.n)
    p.add_argument("--p", type=_positive_int, default=d.p)
    p.add_argument("--d", type=int, default=d.d, help="rank of the collinear component")
    p.add_argument("--snr-db", type=float, default=d.snr_db)
    p.add_argument("--folds", type=int, default=d.folds)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="l0kit", description="l0-regularized regression and spike-and-slab shrinkage")
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="benchmark on simulated collinear designs")
    _common(s)
    _design_flags(s)
    s.add_argument("--trials", type=int, default=ex.ExperimentConfig().trials)
    s.add_argument("--methods", type=_method_list(ex.METHODS), default=list(ex.DEFAULT_METHODS))

    s = sub.add_parser("path", help="SBR and lasso solution paths around the CV choice")
    _common(s)
    _design_flags(s)
    s.add_argument("--points", type=_positive_int, default=50)

    s = sub.add_parser("shrinkage", help="posterior means and implied penalties")
    _common(s)
    s.add_argument("--theta", type=float, default=0.1)
    s.add_argument("--sigma-beta", type=_float_list, default=[1.0, 3.0, 10.0])
    s.add_argument("--sigma-e", type=float, default=1.0)
    s.add_argument("--slab", choices=("bg", "bl", "both"), default="both")
    s.add_argument("--grid-min", type=float, default=-10.0)
    s.add_argument("--grid-max", type=float, default=10.0)
    s.add_argument("--grid-points", type=_positive_int, default=201)

    s = sub.add_parser("fit", help="fit a CSV dataset and tabulate selections")
    _common(s)
    s.add_argument("--input", type=Path, required=True)
    s.add_argument("--response", default="y")
    s.add_argument("--methods", type=_method_list(ex.METHODS), default=["lasso", "enet", "sbr"])
    s.add_argument("--normalize", action=argparse.BooleanOptionalAction, default=True)
    s.add_argument("--folds", type=int, default=10)

    s = sub.add_parser("verify", help="run the quick oracle suite")
    _common(s)
    return ap


def _threads(args) -> int:
    if args.threads is not None:
        return args.threads
    env = os.environ.get("L0KIT_THREADS")
    if env is None or env == "":
        return 1
    try:
        v = int(env)
    except ValueError:
        raise UsageError(f"L0KIT_THREADS must be a positive integer, got {env!r}") from None
    if v < 1:
        raise UsageError(f"L0KIT_THREADS must be a positive integer, got {env!r}")
    return v


def _config(args, trials: int = 1) -> ex.ExperimentConfig:
    if args.folds < 2:
        raise UsageError("--folds must be at least 2")
    if not 0 <= args.d <= args.p:
        raise UsageError("--d must lie in [0, p]")
    k = len(ex.TRUE_VALUES)
    if args.p < k:
        raise UsageError(f"--p must be at least {k}")
    if args.n < 2 * args.folds:
        raise UsageError("--n must allow at least two rows per fold")
    return ex.ExperimentConfig(n=args.n, p=args.p, d=args.d, snr_db=args.snr_db,
                               seed=args.seed, folds=args.folds, trials=trials)


def _gnuplot(path: Path, body: str) -> None:
    path.write_text(body, encoding="utf-8")


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------


def cmd_simulate(args) -> int:
    if args.trials < 1:
        raise UsageError("--trials must be at least 1")
    cfg = _config(args, args.trials)
    results = ex.run_benchmark(cfg, args.methods, threads=_threads(args))
    out = args.out
    fields = [f.name for f in dataclasses.fields(ex.TrialResult)]
    write_table(out / "results.csv", fields, ([getattr(r, f) for f in fields] for r in results))
    summary = ex.summarize(results)
    cols = list(summary[0])
    write_table(out / "summary.csv", cols, ([row[c] for c in cols] for row in summary))
    for row in summary:
        print(f"{row['method']:>6}  median mse {row['median_mse']:.4g}  tp {row['mean_tp']:.2f}  "
              f"fp {row['mean_fp']:.2f}  time {row['mean_time']:.3g}s")
    failed = [r for r in results if r.error]
    for r in failed[:5]:
        print(f"trial {r.trial} {r.method}: {r.error}", file=sys.stderr)
    if args.gnuplot:
        _gnuplot(out / "simulate.gp", (
            "set datafile separator ','\nset style data boxplot\nset ylabel 'squared error'\nset logscale y\n"
            "plot for [m in 'ols lasso enet sbr iht pgd'] 'results.csv' "
            "using (1):(strcol(2) eq m ? $3 : NaN) title m\n"
        ))
    if args.verify:
        for t in range(cfg.trials):
            sim = ex.simulate(cfg, t)
            X = sim.dataset.X
            if np.max(np.abs(X.mean(axis=0))) > 1e-12 or np.max(np.abs(np.linalg.norm(X, axis=0) - 1)) > 1e-12:
                print(f"FAIL  trial {t}: design not normalized", file=sys.stderr)
                return EXIT_RUNTIME
            snr = ex.snr_db_of(X @ sim.beta, sim.sigma_e)
            if abs(snr - cfg.snr_db) > 1e-9:
                print(f"FAIL  trial {t}: SNR {snr} != {cfg.snr_db}", file=sys.stderr)
                return EXIT_RUNTIME
        print("PASS  designs normalized and SNR calibrated")
    return EXIT_RUNTIME if failed and len(failed) == len(results) else EXIT_OK


def cmd_path(args) -> int:
    cfg = _config(args)
    sim = ex.simulate(cfg, 0)
    ds = sim.dataset
    out = args.out
    cv_rows = []
    header = ["lambda"] + [f"beta{j + 1}" for j in range(ds.p)]
    for method in ("sbr", "lasso"):
        cv = ex.cross_validate(ds, method, None, cfg.folds, seed=ex._fold_seed(cfg.seed, 0))
        cv_rows += [(method, lam, mse, int(lam == cv.lambda_cv)) for lam, mse in zip(cv.grid, cv.cv_curve)]
        table = ex.solution_path(ds, method, cv.lambda_cv, points=args.points)
        write_table(out / f"path_{method}.csv", header,
                    ([lam] + list(row) for lam, row in zip(table.lambdas, table.coefficients)))
        print(f"{method:>6}  lambda_cv {cv.lambda_cv:.6g}  selected {int(np.count_nonzero(ex.fit_single(ds, method, cv.lambda_cv).beta))}")
    write_table(out / "cv.csv", ["method", "lambda", "cv_mse", "selected"], cv_rows)
    write_table(out / "beta_true.csv", ["index", "beta"], ((j + 1, b) for j, b in enumerate(sim.beta)))
    if args.gnuplot:
        _gnuplot(out / "path.gp", (
            "set datafile separator ','\nset logscale x\nset xlabel 'lambda'\nset ylabel 'coefficient'\n"
            "set key off\nplot for [j=2:%d] 'path_sbr.csv' using 1:j with lines\n" % (ds.p + 1)
        ))
    if args.verify:
        for method in ("sbr", "lasso"):
            rows = [r for r in cv_rows if r[0] == method]
            chosen = [r for r in rows if r[3]][0]
            if chosen[2] > min(r[2] for r in rows):
                print(f"FAIL  {method}: CV choice is not a curve minimum", file=sys.stderr)
                return EXIT_RUNTIME
        print("PASS  CV choices sit at curve minima")
    return EXIT_OK


def _priors(args) -> list:
    slabs = {"bg": [Slab.GAUSSIAN], "bl": [Slab.LAPLACE], "both": [Slab.GAUSSIAN, Slab.LAPLACE]}[args.slab]
    if not args.sigma_beta:
        raise UsageError("--sigma-beta needs at least one value")
    try:
        return [PriorSpec(args.theta, sb, args.sigma_e, slab) for slab in slabs for sb in args.sigma_beta]
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def cmd_shrinkage(args) -> int:
    priors = _priors(args)
    if not args.grid_min < args.grid_max:
        raise UsageError("--grid-min must be below --grid-max")
    grid = np.linspace(args.grid_min, args.grid_max, args.grid_points)
    if args.grid_min < 0 < args.grid_max and args.grid_points % 2 == 1:
        grid[args.grid_points // 2] = 0.0
    out = args.out
    labels = [p.label for p in priors]
    means, phis = [], []
    for prior in priors:
        reach = max(abs(args.grid_min), abs(args.grid_max))
        check_monotone_posterior_mean(prior, -4 * reach - 10 * prior.sigma_e, 4 * reach + 10 * prior.sigma_e)
        means.append(posterior_mean(prior, grid))
        phis.append(phi_build(prior, grid).phi_values)
    write_table(out / "posterior_mean.csv", ["y"] + labels, ([g] + [m[i] for m in means] for i, g in enumerate(grid)))
    write_table(out / "phi.csv", ["z"] + labels, ([g] + [p[i] for p in phis] for i, g in enumerate(grid)))
    print(f"wrote {len(priors)} priors x {grid.size} points to {out}")
    if args.gnuplot:
        _gnuplot(out / "shrinkage.gp", (
            "set datafile separator ','\nset key autotitle columnhead\nset xlabel 'y'\n"
            "plot for [j=2:%d] 'posterior_mean.csv' using 1:j with lines, x with lines dt 2 notitle\n"
            % (len(labels) + 1)
        ))
    if args.verify:
        worst = max(
            float(np.max(np.abs(m - quadrature_posterior_means(p, grid)))) for p, m in zip(priors, means)
        )
        ok = worst <= 1e-6
        print(f"{'PASS' if ok else 'FAIL'}  posterior mean vs quadrature: max error {worst:.2e}")
        if not ok:
            return EXIT_RUNTIME
    return EXIT_OK


def cmd_fit(args) -> int:
    if args.folds < 2:
        raise UsageError("--folds must be at least 2")
    data = read_csv_dataset(args.input, args.response, normalize=args.normalize)
    ds = data.to_dataset()
    if ds.n < args.folds:
        raise L0KitError(f"{ds.n} rows cannot be split into {args.folds} folds")
    mean_err, norm_err = data.normalization_check()
    print(f"normalization: max |column mean| {mean_err:.3e}, max |norm - 1| {norm_err:.3e}, "
          f"|mean y| {abs(float(ds.y.mean())):.3e}")
    betas = {}
    for method in args.methods:
        value = 0.0
        if method != "ols":
            value = ex.cross_validate(ds, method, None, args.folds, seed=args.seed).lambda_cv
        betas[method] = ex.fit_single(ds, method, value).beta
        chosen = [ds.names[j] for j in np.flatnonzero(betas[method])]
        print(f"{method:>6}  lambda {value:.6g}  {len(chosen)} selected: {' '.join(chosen)}")
    out = args.out
    names = list(ds.names)
    write_table(out / "selection.csv", ["variable"] + args.methods,
                ([v] + [int(betas[m][j] != 0) for m in args.methods] for j, v in enumerate(names)))
    write_table(out / "coefficients.csv", ["variable"] + args.methods,
                ([v] + [betas[m][j] for m in args.methods] for j, v in enumerate(names)))
    if args.verify and args.normalize and (mean_err > 1e-12 or norm_err > 1e-12):
        print("FAIL  normalization outside 1e-12", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


def cmd_verify(args) -> int:
    from .verify import run_all

    results = run_all()
    for r in results:
        print(r.line())
    return EXIT_OK if all(r.passed for r in results) else EXIT_RUNTIME


COMMANDS = {
    "simulate": cmd_simulate,
    "path": cmd_path,
    "shrinkage": cmd_shrinkage,
    "fit": cmd_fit,
    "verify": cmd_verify,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"l0kit {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (L0KitError, OSError, ValueError) as exc:
        print(f"l0kit {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
