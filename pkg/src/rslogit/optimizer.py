"""Cyclical descent for penalized weighted M-estimators of logistic regression.

Each outer iteration runs

1. a pass over the coordinates in a fresh random order, each coordinate moved to
   the minimizer of the objective along that axis;
2. a scalar minimization over the intercept (when the model has one);
3. a global rescaling beta <- c * beta with c minimizing the objective;

and stops once the relative decrease |M_prev - M| / M falls below the tolerance.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy import stats

from . import _kernels as K
from .losses import LossSpec, logistic
from .penalties import PenaltyFamily, PenaltySpec, adaptive_weights, penalty_value
from .weights import RobustLocationScatter, robust_location_scatter

__all__ = [
    "Dataset",
    "FitConfig",
    "FitState",
    "FitResult",
    "objective",
    "resolve_weights",
    "initial_estimator",
    "coordinate_pass",
    "intercept_step",
    "scaling_step",
    "fit",
    "fit_path",
    "null_start",
]

log = logging.getLogger(__name__)

ZERO_SNAP = 1e-10
LINE_XTOL = 1e-8
ZERO_SCAN_STEPS = 7
# relative size of rounding noise in a summed objective
ROUNDOFF = 64 * np.finfo(float).eps


@dataclass(frozen=True)
class Dataset:
    """Binary responses ``y`` and covariates ``X`` (no intercept column)."""

    X: np.ndarray
    y: np.ndarray
    names: tuple[str, ...] | None = None

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        y = np.asarray(self.y, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.shape[0]:
            raise ValueError(f"inconsistent shapes X{X.shape} y{y.shape}")
        if X.shape[0] == 0:
            raise ValueError("empty dataset")
        if not np.all(np.isfinite(X)):
            raise ValueError("covariates must be finite")
        if not np.all((y == 0) | (y == 1)):
            raise ValueError("responses must be 0 or 1")
        if self.names is not None and len(self.names) != X.shape[1]:
            raise ValueError("one name per covariate expected")
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    def rows(self, idx) -> "Dataset":
        return Dataset(self.X[idx], self.y[idx], self.names)

    def columns(self, idx) -> "Dataset":
        idx = np.asarray(idx, dtype=int)
        names = None if self.names is None else tuple(self.names[i] for i in idx)
        return Dataset(self.X[:, idx], self.y, names)


@dataclass(frozen=True)
class FitConfig:
    """Estimator definition and solver controls.

    ``weights`` is ``"none"`` (w = 1) or ``"hard"`` (hard-rejection leverage
    weights recomputed on whatever sample is being fitted). ``obs_weights``, when
    given, overrides both.
    """

    loss: LossSpec = field(default_factory=LossSpec.croux)
    penalty: PenaltySpec = field(default_factory=PenaltySpec)
    use_intercept: bool = True
    weights: str = "none"
    obs_weights: np.ndarray | None = field(default=None, compare=False)
    tolerance: float = 1e-6
    max_outer_iters: int = 200
    active_index_set: tuple[int, ...] | None = None
    trim_alpha: float = 0.15
    init_keep_fraction: float = 0.1
    rng_seed: int = 0

    def __post_init__(self):
        if self.weights not in ("none", "hard"):
            raise ValueError(f"unknown weighting scheme {self.weights!r}")
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")
        if self.max_outer_iters < 1:
            raise ValueError("max_outer_iters must be positive")
        if not 0.0 <= self.trim_alpha < 0.5:
            raise ValueError("trim_alpha must lie in [0, 0.5)")
        if not 0.0 < self.init_keep_fraction <= 1.0:
            raise ValueError("init_keep_fraction must lie in (0, 1]")
        if self.active_index_set is not None:
            object.__setattr__(self, "active_index_set",
                               tuple(sorted(int(j) for j in self.active_index_set)))

    def with_lambda(self, lam: float) -> "FitConfig":
        return replace(self, penalty=self.penalty.with_lambda(lam))


@dataclass
class FitState:
    intercept: float
    beta: np.ndarray


@dataclass
class FitResult:
    intercept: float
    beta: np.ndarray
    active_set: list[int]
    objective_trace: list[float]
    converged: bool
    n_outer_iters: int
    final_objective: float
    lam: float
    weights: np.ndarray = field(repr=False)
    loc_scatter: RobustLocationScatter | None = field(default=None, repr=False)
    config: FitConfig | None = field(default=None, repr=False)

    def linear_predictor(self, X):
        return linear_predictor(X, self.beta, self.intercept)

    def predict_proba(self, X):
        return logistic(self.linear_predictor(X))


def linear_predictor(X, beta, intercept=0.0):
    """intercept + X @ beta, computed the same way whatever the memory layout of X."""
    # BLAS picks its kernel by layout, which changes the last bit
    return np.ascontiguousarray(X, dtype=float) @ np.asarray(beta, dtype=float) + intercept


# ------------------------------------------------------------------ internals

def resolve_weights(dataset: Dataset, config: FitConfig):
    """Observation weights for ``dataset`` under ``config`` and the fitted scatter."""
    if config.obs_weights is not None:
        w = np.asarray(config.obs_weights, dtype=float)
        if w.shape != (dataset.n,) or np.any(w < 0) or not np.all(np.isfinite(w)):
            raise ValueError("obs_weights must be a non-negative vector of length n")
        return w, None
    if config.weights == "hard":
        ls = robust_location_scatter(dataset.X)
        return ls.weights(dataset.X), ls
    return np.ones(dataset.n), None


class _Problem:
    """Arrays in the layout the compiled kernels expect (zero-weight rows dropped).

    With ``center`` the columns are shifted by their weighted means and the
    kernels see the intercept gamma + shift'beta instead of gamma. The model and
    the objective are unchanged; only the coordinates the descent moves along
    differ, which keeps the intercept from fighting uncentered columns.
    """

    def __init__(self, dataset: Dataset, w, loss: LossSpec, penalty: PenaltySpec,
                 center: bool = False, tolerance: float = LINE_XTOL):
        keep = w > 0
        # the line searches must resolve steps at least as finely as the outer rule
        self.xtol = min(LINE_XTOL, float(tolerance))
        self.n = dataset.n
        self.inv_n = 1.0 / dataset.n
        X = dataset.X[keep]
        self.shift = np.zeros(dataset.p)
        if center and X.shape[0]:
            self.shift = w[keep] @ X / w[keep].sum()
            X = X - self.shift
        self.X = np.asfortranarray(X)
        self.y = np.ascontiguousarray(dataset.y[keep])
        self.w = np.ascontiguousarray(w[keep])
        self.loss = loss
        self.tab, self.meta = loss.table()
        self.set_penalty(penalty)
        if self.X.shape[0] > 1:
            sd = self.X.std(axis=0)
        else:
            sd = np.zeros(dataset.p)
        self.col_scale = np.where(sd > 0, 1.0 / np.where(sd > 0, sd, 1.0), 1.0)

    def set_penalty(self, penalty: PenaltySpec):
        p = self.X.shape[1]
        self.penalty = penalty
        self.pargs = (penalty.code, float(penalty.lam), np.ascontiguousarray(penalty.lam_scale(p)),
                      float(penalty.theta), float(penalty.a), float(penalty.q))

    def internal_intercept(self, gamma, beta):
        return float(gamma) + float(self.shift @ beta)

    def external_intercept(self, gamma, beta):
        return float(gamma) - float(self.shift @ beta)

    def predictor(self, gamma, beta):
        return self.X @ beta + gamma

    def objective(self, gamma, beta):
        t = self.predictor(gamma, beta)
        loss = K.loss_mean(self.loss.code, float(self.loss.c), self.y, self.w, t, self.inv_n)
        return loss + K.penalty_total(*self.pargs[:1], self.pargs[1], *self.pargs[2:], beta)

    def coordinate_pass(self, perm, t, beta):
        fam, lam, scale, theta, a, q = self.pargs
        K.coordinate_pass(np.ascontiguousarray(perm, dtype=np.int64), self.X, self.y, self.w, t,
                          beta, self.inv_n, self.tab, self.meta, fam, lam, scale, theta, a, q,
                          self.col_scale, ZERO_SCAN_STEPS, self.xtol)

    def intercept_step(self, gamma, t):
        return K.intercept_step(float(gamma), t, self.y, self.w, self.inv_n, self.tab, self.meta,
                                self.xtol)

    def scale_factor(self, gamma, beta):
        z = self.X @ beta
        t = z + gamma
        fam, lam, scale, theta, a, q = self.pargs
        return K.scaling_step(float(gamma), z, t, self.y, self.w, beta, self.inv_n, self.tab,
                              self.meta, fam, lam, scale, theta, a, q, self.xtol)


def objective(dataset: Dataset, gamma, beta, config: FitConfig, weights=None) -> float:
    """M_n = (1/n) sum phi(y_i, gamma + x_i' beta) w_i + I_lambda(beta)."""
    beta = np.asarray(beta, dtype=float)
    if beta.shape != (dataset.p,):
        raise ValueError(f"beta has shape {beta.shape}, expected ({dataset.p},)")
    if weights is None:
        weights, _ = resolve_weights(dataset, config)
    weights = np.asarray(weights, dtype=float)
    if weights.shape != (dataset.n,):
        raise ValueError("weights must have length n")
    t = dataset.X @ beta + float(gamma)
    loss = K.loss_mean(config.loss.code, float(config.loss.c), np.ascontiguousarray(dataset.y),
                       np.ascontiguousarray(weights), np.ascontiguousarray(t), 1.0 / dataset.n)
    return float(loss + penalty_value(_effective_penalty(config.penalty, dataset.p), beta))


def _effective_penalty(penalty: PenaltySpec, p: int) -> PenaltySpec:
    if penalty.family is PenaltyFamily.ADALASSO and penalty.adaptive_weights is None:
        if penalty.lam == 0.0:
            return penalty.with_weights(np.ones(p))
        raise ValueError("adaptive LASSO needs adaptive_weights (fit() derives them)")
    return penalty


def _logit(u):
    return math.log(u / (1.0 - u))


def initial_estimator(dataset: Dataset, config: FitConfig, weights=None):
    """Robust start: trimmed-score screening, then an unpenalized weighted fit.

    The score of covariate j is the absolute alpha-trimmed mean of
    x_ij (y_i - ybar); the ceil(tau p) best-scoring covariates are fitted with the
    Croux-Haesbroeck loss and hard-rejection weights, and the result is embedded
    in R^p with zeros elsewhere.
    """
    X, y = dataset.X, dataset.y
    n, p = X.shape
    alpha = config.trim_alpha
    ybar = y.mean()
    ytrim = float(stats.trim_mean(y, alpha)) if n > 2 else ybar
    gamma_fb = _logit(min(max(ytrim, 1e-3), 1 - 1e-3)) if config.use_intercept else 0.0
    zeros = np.zeros(p)

    kappa = X * (y - ybar)[:, None]
    scores = np.abs(stats.trim_mean(kappa, alpha, axis=0)) if n > 2 else np.abs(kappa.mean(0))
    if not np.any(scores > 1e-12 * (1.0 + np.abs(kappa).max())):
        return gamma_fb, zeros
    k = max(1, math.ceil(config.init_keep_fraction * p - 1e-9))
    sel = np.sort(np.argsort(-scores, kind="stable")[:k])

    if config.weights == "hard" and weights is not None:
        w = np.asarray(weights, dtype=float)
    else:
        try:
            w = robust_location_scatter(X).weights(X)
        except (ValueError, np.linalg.LinAlgError):
            w = np.ones(n)
    sub_cfg = FitConfig(loss=LossSpec.croux(), use_intercept=config.use_intercept,
                        obs_weights=w, tolerance=config.tolerance,
                        max_outer_iters=config.max_outer_iters, rng_seed=config.rng_seed)
    res = fit(dataset.columns(sel), sub_cfg, start=(0.0, np.zeros(k)))
    if not res.converged or not np.all(np.isfinite(res.beta)):
        return gamma_fb, zeros
    beta0 = zeros.copy()
    beta0[sel] = res.beta
    return float(res.intercept), beta0


def coordinate_pass(dataset: Dataset, state: FitState, config: FitConfig, permutation,
                    weights=None) -> FitState:
    """One cyclical pass over ``permutation``; returns the updated state."""
    if weights is None:
        weights, _ = resolve_weights(dataset, config)
    prob = _Problem(dataset, np.asarray(weights, dtype=float), config.loss,
                    _effective_penalty(config.penalty, dataset.p))
    beta = np.array(state.beta, dtype=float)
    t = prob.predictor(state.intercept, beta)
    prob.coordinate_pass(permutation, t, beta)
    return FitState(state.intercept, beta)


def intercept_step(dataset: Dataset, state: FitState, config: FitConfig, weights=None) -> FitState:
    if weights is None:
        weights, _ = resolve_weights(dataset, config)
    prob = _Problem(dataset, np.asarray(weights, dtype=float), config.loss,
                    _effective_penalty(config.penalty, dataset.p))
    beta = np.array(state.beta, dtype=float)
    t = prob.predictor(state.intercept, beta)
    return FitState(float(prob.intercept_step(state.intercept, t)), beta)


def scaling_step(dataset: Dataset, state: FitState, config: FitConfig, weights=None) -> FitState:
    """Replace beta by c * beta, c in [1e-3, 1e3] minimizing the objective."""
    beta = np.array(state.beta, dtype=float)
    if not beta.any():
        return FitState(state.intercept, beta)
    if weights is None:
        weights, _ = resolve_weights(dataset, config)
    prob = _Problem(dataset, np.asarray(weights, dtype=float), config.loss,
                    _effective_penalty(config.penalty, dataset.p))
    c = prob.scale_factor(state.intercept, beta)
    return FitState(state.intercept, beta * c)


def _run(prob: _Problem, gamma, beta, config: FitConfig, rng, index_set):
    """Outer iterations from (gamma, beta). Returns gamma, beta, trace, converged."""
    beta = np.array(beta, dtype=float)
    gamma = float(gamma) if config.use_intercept else 0.0
    M = prob.objective(gamma, beta)
    if not math.isfinite(M):
        raise FloatingPointError(f"objective is {M} at the starting point")
    trace = [M]
    converged = False
    for _ in range(config.max_outer_iters):
        prev_gamma, prev_beta = gamma, beta.copy()
        t = prob.predictor(gamma, beta)
        prob.coordinate_pass(rng.permutation(index_set), t, beta)
        if config.use_intercept:
            gamma = prob.intercept_step(gamma, t)
        if beta.any():
            beta *= prob.scale_factor(gamma, beta)
        M_new = prob.objective(gamma, beta)
        if math.isnan(M_new):
            raise FloatingPointError(
                f"objective became NaN after {len(trace)} iterations (lambda={prob.penalty.lam})")
        if M_new > M:
            if M_new - M > ROUNDOFF * abs(M):
                # a genuine increase: keep the better iterate
                gamma, beta = prev_gamma, prev_beta
            else:
                # the objective cannot resolve the last step; the derivative-polished
                # coordinates are kept
                trace.append(M_new)
            converged = True
            break
        trace.append(M_new)
        ratio = abs(M - M_new) / M_new if M_new > 0 else 0.0
        M = M_new
        if ratio < config.tolerance:
            converged = True
            break
    return gamma, beta, trace, converged


def fit(dataset: Dataset, config: FitConfig, start=None, weights=None) -> FitResult:
    """Minimize the penalized objective.

    Parameters
    ----------
    dataset : Dataset
    config : FitConfig
    start : (float, array), optional
        Starting intercept and slopes; the robust initial estimator otherwise.
    weights : array, optional
        Pre-computed observation weights (skips :func:`resolve_weights`).
    """
    loc_scatter = None
    if weights is None:
        weights, loc_scatter = resolve_weights(dataset, config)
    weights = np.asarray(weights, dtype=float)
    penalty = config.penalty
    init = None
    if start is None:
        init = initial_estimator(dataset, config, weights)
        start = init
    if penalty.family is PenaltyFamily.ADALASSO and penalty.adaptive_weights is None:
        if init is None:
            init = initial_estimator(dataset, config, weights)
        penalty = penalty.with_weights(adaptive_weights(init[1], penalty.ada_gamma,
                                                        penalty.ada_delta))
        config = replace(config, penalty=penalty)
    gamma0, beta0 = start
    beta0 = np.asarray(beta0, dtype=float)
    if beta0.shape != (dataset.p,):
        raise ValueError("starting beta has the wrong length")
    prob = _Problem(dataset, weights, config.loss, penalty, center=config.use_intercept,
                    tolerance=config.tolerance)
    index_set = (np.arange(dataset.p) if config.active_index_set is None
                 else np.asarray(config.active_index_set, dtype=np.int64))
    rng = np.random.default_rng(config.rng_seed)
    gamma0 = prob.internal_intercept(gamma0, beta0) if config.use_intercept else 0.0
    gamma, beta, trace, converged = _run(prob, gamma0, beta0, config, rng, index_set)
    if not converged:
        log.warning("no convergence after %d outer iterations (lambda=%g)",
                    config.max_outer_iters, penalty.lam)
    beta[np.abs(beta) < ZERO_SNAP] = 0.0
    return FitResult(
        intercept=prob.external_intercept(gamma, beta) if config.use_intercept else 0.0,
        beta=beta,
        active_set=[int(j) for j in np.flatnonzero(beta)],
        objective_trace=trace,
        converged=converged,
        n_outer_iters=len(trace) - 1,
        final_objective=float(prob.objective(gamma, beta)),
        lam=float(penalty.lam),
        weights=weights,
        loc_scatter=loc_scatter,
        config=config,
    )


def null_start(dataset: Dataset, config: FitConfig, weights=None):
    """Intercept-only starting point: logit of the weighted response mean, beta = 0."""
    if weights is None:
        weights, _ = resolve_weights(dataset, config)
    weights = np.asarray(weights, dtype=float)
    gamma = 0.0
    if config.use_intercept:
        sw = weights.sum()
        ybar = float(weights @ dataset.y / sw) if sw > 0 else 0.5
        gamma = _logit(min(max(ybar, 1e-3), 1 - 1e-3))
    return gamma, np.zeros(dataset.p)


def fit_path(dataset: Dataset, config: FitConfig, lambdas: Sequence[float], weights=None,
             start=None) -> list[FitResult]:
    """Fit every lambda, largest first, each warm-started from the previous solution.

    The first fit starts from ``start`` or, by default, from the intercept-only
    model, so that at the top of a grid built by ``default_lambda_grid`` the
    path begins at the sparse end. Results come back in the order of ``lambdas``.
    """
    lambdas = np.asarray(lambdas, dtype=float)
    if weights is None:
        weights, _ = resolve_weights(dataset, config)
    penalty = config.penalty
    if penalty.family is PenaltyFamily.ADALASSO and penalty.adaptive_weights is None:
        init = initial_estimator(dataset, config, weights)
        config = replace(config, penalty=penalty.with_weights(
            adaptive_weights(init[1], penalty.ada_gamma, penalty.ada_delta)))
    if start is None:
        start = null_start(dataset, config, weights)
    out: list[FitResult | None] = [None] * len(lambdas)
    for k in np.argsort(-lambdas, kind="stable"):
        res = fit(dataset, config.with_lambda(float(lambdas[k])), start=start, weights=weights)
        out[k] = res
        start = (res.intercept, res.beta)
    return out
