"""Command-line entry point: ``rslogit {fit,cv,simulate,predict}``.

Exit codes: 0 success, 2 bad arguments, 3 bad data or unwritable output,
4 the fit did not converge (unless ``--allow-nonconverged``).
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import __version__
from .asymptotics import sandwich_covariance
from .crossval import CvConfig, cross_validate, default_lambda_grid
from .losses import LossSpec, SingularInformation, logistic
from .optimizer import Dataset, FitConfig, fit, fit_path, linear_predictor, resolve_weights
from .penalties import PenaltyFamily, PenaltySpec
from .simulate import MIN_REPLICATIONS, EstimatorSpec, ScenarioSpec, run_experiment

EXIT_ARGS = 2
EXIT_DATA = 3
EXIT_NOT_CONVERGED = 4

MISSING = {"", "na", "nan", "null", "none", "?"}


class DataError(Exception):
    pass


class ArgumentError(Exception):
    pass


# ------------------------------------------------------------------ data

def read_csv(path, response: str | None):
    """Covariate matrix, response vector (or None) and covariate names."""
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror}") from None
    if not rows:
        raise DataError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    if len(set(header)) != len(header):
        raise DataError(f"{path}: duplicate column names")
    if response is not None and response not in header:
        raise DataError(f"{path}: no response column {response!r}")
    resp_idx = header.index(response) if response is not None else None
    names = [h for i, h in enumerate(header) if i != resp_idx]
    if not names:
        raise DataError(f"{path}: no covariate columns")
    X, y = [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise DataError(f"{path}: row {lineno} has {len(row)} fields, expected {len(header)}")
        xs = []
        for i, raw in enumerate(row):
            cell = raw.strip()
            if cell.lower() in MISSING:
                raise DataError(f"{path}: row {lineno}, column {header[i]!r}: missing value")
            if i == resp_idx:
                if cell not in ("0", "1"):
                    raise DataError(f"{path}: row {lineno}: response {cell!r} is not 0 or 1")
                y.append(float(cell))
                continue
            try:
                v = float(cell)
            except ValueError:
                raise DataError(f"{path}: row {lineno}, column {header[i]!r}: "
                                f"{cell!r} is not a number") from None
            if not math.isfinite(v):
                raise DataError(f"{path}: row {lineno}, column {header[i]!r}: non-finite value")
            xs.append(v)
        X.append(xs)
    if not X:
        raise DataError(f"{path}: no data rows")
    return np.array(X), (np.array(y) if resp_idx is not None else None), names


def robust_standardization(X):
    """Per-column median and MAD (standard deviation when the MAD is 0, else 1)."""
    center = np.median(X, axis=0)
    scale = 1.4826 * np.median(np.abs(X - center), axis=0)
    sd = X.std(axis=0)
    scale = np.where(scale > 0, scale, np.where(sd > 0, sd, 1.0))
    return center, scale


# ------------------------------------------------------------------ arguments

def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def _add_model_args(ap):
    ap.add_argument("--data", required=True, help="CSV file with a header row")
    ap.add_argument("--response", required=True, help="name of the 0/1 response column")
    ap.add_argument("--loss", choices=["deviance", "ls", "croux", "div"], default="croux")
    ap.add_argument("--c", type=float, default=0.5, help="tuning constant of croux/div")
    ap.add_argument("--penalty", choices=[f.value for f in PenaltyFamily], default="none")
    ap.add_argument("--theta", type=float, default=1.0, help="elastic net mixing")
    ap.add_argument("--a", type=float, default=None, help="SCAD/MCP shape (3.7 / 3)")
    ap.add_argument("--q", type=float, default=1.0, help="Bridge exponent (>= 1)")
    ap.add_argument("--weights", choices=["none", "hard"], default="none")
    ap.add_argument("--intercept", action=argparse.BooleanOptionalAction, default=True)
    ap.add_argument("--standardize", action="store_true",
                    help="fit on median/MAD-scaled covariates, report original-scale coefficients")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--tol", type=float, default=1e-6)
    ap.add_argument("--max-iter", type=_positive_int, default=200)
    ap.add_argument("--out", help="write output here instead of stdout")


def build_parser():
    ap = _Parser(prog="rslogit",
                 description="Robust penalized logistic regression")
    ap.add_argument("--version", action="version", version=f"rslogit {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p_fit = sub.add_parser("fit", help="fit at a single penalty level")
    _add_model_args(p_fit)
    p_fit.add_argument("--lambda", dest="lam", type=float, default=0.0)
    p_fit.add_argument("--std-errors", action="store_true",
                       help="add sandwich standard errors for the active coordinates")
    p_fit.add_argument("--allow-nonconverged", action="store_true")

    p_cv = sub.add_parser("cv", help="choose lambda by K-fold cross-validation")
    _add_model_args(p_cv)
    p_cv.add_argument("--k", type=_positive_int, default=5)
    p_cv.add_argument("--criterion", choices=["cv", "rcv"], default="rcv")
    grid = p_cv.add_mutually_exclusive_group()
    grid.add_argument("--grid-size", type=_positive_int, default=20)
    grid.add_argument("--lambdas", help="comma-separated penalty levels")
    p_cv.add_argument("--allow-nonconverged", action="store_true")

    p_sim = sub.add_parser("simulate", help="Monte Carlo experiment")
    p_sim.add_argument("--scheme", choices=["c0", "ca", "cb"], default="c0")
    p_sim.add_argument("--n", type=_positive_int, default=150)
    p_sim.add_argument("--p", type=_positive_int, default=40)
    p_sim.add_argument("--epsilon", type=float, default=0.0)
    p_sim.add_argument("--m", type=float, default=1.0)
    p_sim.add_argument("--gamma0", type=float, default=0.0)
    p_sim.add_argument("--test-size", type=_positive_int, default=100)
    p_sim.add_argument("--reps", type=_positive_int, default=50)
    p_sim.add_argument("--estimators", default="wm-mcp-rcv",
                       help="comma-separated list such as wm-mcp-rcv,ml-lasso-cv")
    p_sim.add_argument("--grid-size", type=_positive_int, default=20)
    p_sim.add_argument("--k", type=_positive_int, default=5)
    p_sim.add_argument("--seed", type=int, default=0)
    p_sim.add_argument("--out", required=True, help="output directory")

    p_pred = sub.add_parser("predict", help="probabilities and classes from a fit JSON")
    p_pred.add_argument("--model", required=True, help="JSON written by `rslogit fit`")
    p_pred.add_argument("--data", required=True)
    p_pred.add_argument("--response", default=None, help="column to ignore, if present")
    p_pred.add_argument("--out")
    return ap


def _fit_config(args, lam=0.0) -> FitConfig:
    try:
        loss = LossSpec(args.loss, args.c)
        penalty = PenaltySpec(args.penalty, lam, theta=args.theta, a=args.a, q=args.q)
        return FitConfig(loss=loss, penalty=penalty, use_intercept=args.intercept,
                         weights=args.weights, tolerance=args.tol,
                         max_outer_iters=args.max_iter, rng_seed=args.seed)
    except ValueError as exc:
        raise ArgumentError(str(exc)) from None


def _config_echo(cfg: FitConfig, args) -> dict:
    pen = cfg.penalty
    return {
        "loss": cfg.loss.kind.value,
        "c": cfg.loss.c,
        "penalty": pen.family.value,
        "lambda": pen.lam,
        "theta": pen.theta,
        "a": pen.a,
        "q": pen.q,
        "weights": cfg.weights,
        "intercept": cfg.use_intercept,
        "standardize": bool(args.standardize),
        "seed": cfg.rng_seed,
        "tolerance": cfg.tolerance,
        "max_outer_iters": cfg.max_outer_iters,
        "trim_alpha": cfg.trim_alpha,
        "init_keep_fraction": cfg.init_keep_fraction,
    }


def _load(args, min_rows):
    X, y, names = read_csv(args.data, args.response)
    if X.shape[0] < min_rows:
        raise DataError(f"{args.data}: need at least {min_rows} rows, found {X.shape[0]}")
    center = scale = None
    if args.standardize:
        center, scale = robust_standardization(X)
        X = (X - center) / scale
    try:
        return Dataset(X, y, tuple(names)), center, scale
    except ValueError as exc:
        raise DataError(f"{args.data}: {exc}") from None


def _to_original(gamma, beta, center, scale):
    if center is None:
        return gamma, beta
    b = beta / scale
    return gamma - float(b @ center), b


def _std_errors(data, res, center, scale):
    try:
        sw = sandwich_covariance(data, res)
    except SingularInformation:
        return None
    cov = sw.active / sw.n
    names = list(sw.active_names)
    if center is not None:
        # (gamma, beta) on the original scale are linear in the fitted ones
        T = np.zeros((len(names), len(names)))
        for r, key in enumerate(names):
            if key == "intercept":
                T[r, r] = 1.0
                for c2, k2 in enumerate(names):
                    if k2 != "intercept":
                        T[r, c2] = -center[k2] / scale[k2]
            else:
                T[r, r] = 1.0 / scale[key]
        cov = T @ cov @ T.T
    se = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    return {("intercept" if k == "intercept" else data.names[k]): float(v)
            for k, v in zip(names, se)}


def _fit_payload(data, res, cfg, args, center, scale, with_se=False):
    gamma, beta = _to_original(res.intercept, res.beta, center, scale)
    out = {
        "coefficients": {name: float(b) for name, b in zip(data.names, beta)},
        "intercept": float(gamma),
        "active_set": [data.names[j] for j in res.active_set],
        "lambda": res.lam,
        "objective": res.final_objective,
        "converged": res.converged,
        "iterations": res.n_outer_iters,
        "version": __version__,
        "config": _config_echo(cfg, args),
    }
    if with_se:
        out["std_errors"] = _std_errors(data, res, center, scale)
    return out


def _emit_json(obj, out):
    text = json.dumps(obj, indent=2) + "\n"
    if out:
        try:
            Path(out).write_text(text)
        except OSError as exc:
            raise DataError(f"cannot write {out}: {exc.strerror}") from None
    else:
        sys.stdout.write(text)


# ------------------------------------------------------------------ commands

def cmd_fit(args) -> int:
    cfg = _fit_config(args, args.lam)
    data, center, scale = _load(args, 10)
    res = fit(data, cfg)
    _emit_json(_fit_payload(data, res, cfg, args, center, scale, args.std_errors), args.out)
    if not res.converged and not args.allow_nonconverged:
        print(f"rslogit: no convergence after {res.n_outer_iters} iterations", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    return 0


def _parse_lambdas(text):
    try:
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ArgumentError(f"--lambdas: cannot parse {text!r}") from None
    if not vals or any(not (math.isfinite(v) and v >= 0) for v in vals):
        raise ArgumentError("--lambdas needs finite non-negative values")
    return vals


def cmd_cv(args) -> int:
    cfg = _fit_config(args)
    lambdas = _parse_lambdas(args.lambdas) if args.lambdas else None
    data, center, scale = _load(args, 2 * args.k)
    weights, _ = resolve_weights(data, cfg)
    if lambdas is None:
        if args.grid_size < 2:
            raise ArgumentError("--grid-size must be at least 2")
        try:
            lambdas = default_lambda_grid(data, cfg, args.grid_size, weights=weights)
        except ValueError as exc:
            raise DataError(str(exc)) from None
    cvres = cross_validate(data, CvConfig(tuple(lambdas), cfg, args.k, args.criterion,
                                          rng_seed=args.seed))
    path = fit_path(data, cfg, cvres.lambdas, weights=weights)
    best = path[int(np.flatnonzero(cvres.lambdas == cvres.chosen_lambda)[0])]
    payload = {
        "criterion": args.criterion,
        "k_folds": args.k,
        "lambdas": cvres.lambdas.tolist(),
        "curve": cvres.values.tolist(),
        "cv_curve": cvres.classical.tolist(),
        "rcv_curve": cvres.robust.tolist(),
        "chosen_lambda": cvres.chosen_lambda,
        "failed_cells": int(cvres.failed.sum()),
        "nonconverged_cells": int(cvres.not_converged.sum()),
        "fit": _fit_payload(data, best, cfg.with_lambda(cvres.chosen_lambda), args, center, scale),
        "version": __version__,
    }
    _emit_json(payload, args.out)
    if not best.converged and not args.allow_nonconverged:
        print("rslogit: the fit at the chosen lambda did not converge", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    return 0


class _Parser(argparse.ArgumentParser):
    """Reports usage mistakes as a single diagnostic line."""

    def error(self, message):
        self.exit(EXIT_ARGS, f"rslogit: error: {message}\n")


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(row.get(h)) for h in header])


def cmd_simulate(args) -> int:
    try:
        scenario = ScenarioSpec(args.n, args.p, gamma0=args.gamma0, scheme=args.scheme,
                                epsilon=args.epsilon, m=args.m, test_size=args.test_size,
                                rng_seed=args.seed)
        specs = [EstimatorSpec.parse(e, grid_size=args.grid_size, k_folds=args.k)
                 for e in args.estimators.split(",") if e.strip()]
    except ValueError as exc:
        raise ArgumentError(str(exc)) from None
    if not specs:
        raise ArgumentError("--estimators is empty")
    if args.reps < MIN_REPLICATIONS:
        raise ArgumentError(f"--reps must be at least {MIN_REPLICATIONS}")
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".write-test"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise DataError(f"cannot write to {out}: {exc.strerror}") from None
    exp = run_experiment(scenario, specs, args.reps, seed=args.seed)
    summary_header = ["estimator", "scheme", "n", "p", "epsilon", "m",
                      "pmse", "mse", "tpp", "tnp", "reps_used"]
    _write_csv(out / "summary.csv", summary_header,
               [s.row(scenario) for s in exp.summaries.values()])
    rep_header = ["rep", "estimator", "lambda", "n_active", "converged",
                  "pmse", "mse", "tpp", "tnp", "error"]
    _write_csv(out / "replications.csv", rep_header, exp.records)
    config = {
        "version": __version__,
        "scenario": {**asdict(scenario), "scheme": scenario.scheme.value,
                     "n_contaminated": scenario.n_contaminated},
        "estimators": [s.name for s in specs],
        "replications": args.reps,
        "seed": args.seed,
        "grid_size": args.grid_size,
        "k_folds": args.k,
        "failures": {k: s.failures for k, s in exp.summaries.items()},
    }
    (out / "config.json").write_text(json.dumps(config, indent=2) + "\n")
    return 0


def cmd_predict(args) -> int:
    try:
        model = json.loads(Path(args.model).read_text())
        coefs = model["coefficients"]
        intercept = float(model.get("intercept", 0.0))
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise DataError(f"cannot read model {args.model}: {exc}") from None
    X, _, names = read_csv(args.data, args.response)
    missing = [c for c in coefs if c not in names]
    if missing:
        raise DataError(f"{args.data}: missing covariates {', '.join(missing)}")
    cols = [names.index(c) for c in coefs]
    beta = np.array([float(coefs[c]) for c in coefs])
    t = linear_predictor(X[:, cols], beta, intercept)
    prob = logistic(t)
    rows = [{"prob": float(pr), "class": int(tt > 0)} for pr, tt in zip(prob, t)]
    if args.out:
        try:
            _write_csv(args.out, ["prob", "class"], rows)
        except OSError as exc:
            raise DataError(f"cannot write {args.out}: {exc.strerror}") from None
    else:
        w = csv.writer(sys.stdout, lineterminator="\n")
        w.writerow(["prob", "class"])
        for r in rows:
            w.writerow([repr(r["prob"]), r["class"]])
    return 0


COMMANDS = {"fit": cmd_fit, "cv": cmd_cv, "simulate": cmd_simulate, "predict": cmd_predict}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR,
                        format="rslogit: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ArgumentError as exc:
        print(f"rslogit: error: {exc}", file=sys.stderr)
        return EXIT_ARGS
    except DataError as exc:
        print(f"rslogit: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
