"""K-fold selection of the penalty level.

Both criteria are computed from the same fold fits: the classical one averages
held-out deviances, the robust one averages phi(y_i, t_i) w(x_i) over held-out
rows with the leverage weights of the training fold.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .losses import Psi, deviance, phi
from .optimizer import Dataset, FitConfig, fit, fit_path, null_start, resolve_weights
from .penalties import PenaltySpec
from .weights import robust_location_scatter

__all__ = [
    "Criterion",
    "CvConfig",
    "CvResult",
    "fold_partition",
    "cross_validate",
    "default_lambda_grid",
    "lambda_max",
    "select_lambda",
]

log = logging.getLogger(__name__)


class Criterion(str, enum.Enum):
    CLASSICAL = "cv"
    ROBUST = "rcv"


@dataclass(frozen=True)
class CvConfig:
    lambda_grid: tuple[float, ...]
    fit: FitConfig = field(default_factory=FitConfig)
    k_folds: int = 5
    criterion: Criterion = Criterion.ROBUST
    rng_seed: int = 0

    def __post_init__(self):
        grid = tuple(sorted(float(v) for v in np.atleast_1d(self.lambda_grid)))
        if not grid:
            raise ValueError("lambda grid is empty")
        if any(not (math.isfinite(v) and v >= 0) for v in grid):
            raise ValueError("lambda grid values must be finite and non-negative")
        if self.k_folds < 2:
            raise ValueError("need at least two folds")
        object.__setattr__(self, "lambda_grid", grid)
        object.__setattr__(self, "criterion", Criterion(self.criterion))


@dataclass
class CvResult:
    lambdas: np.ndarray
    criterion: Criterion
    classical: np.ndarray
    robust: np.ndarray
    chosen_lambda: float
    coefficients: np.ndarray = field(repr=False)
    """(n_lambda, K, 1 + p) array: intercept then slopes of every fold fit."""
    not_converged: np.ndarray = field(repr=False)
    failed: np.ndarray = field(repr=False)
    folds: list[np.ndarray] = field(repr=False)

    @property
    def values(self) -> np.ndarray:
        return self.curve(self.criterion)

    def curve(self, criterion) -> np.ndarray:
        return self.robust if Criterion(criterion) is Criterion.ROBUST else self.classical

    def chosen(self, criterion) -> float:
        return select_lambda(self.lambdas, self.curve(criterion))


def fold_partition(n: int, k: int, seed: int = 0) -> list[np.ndarray]:
    """Random partition of range(n) into k sorted blocks whose sizes differ by at most one."""
    if not 2 <= k <= n:
        raise ValueError(f"need 2 <= k <= n, got k={k}, n={n}")
    perm = np.random.default_rng(seed).permutation(n)
    return [np.sort(block) for block in np.array_split(perm, k)]


def select_lambda(lambdas, values) -> float:
    """Grid argmin; exact ties go to the largest lambda."""
    lambdas = np.asarray(lambdas, dtype=float)
    values = np.asarray(values, dtype=float)
    best = np.nanmin(values)
    return float(lambdas[np.flatnonzero(values == best).max()])


def _fold_weights(train: Dataset, test: Dataset, config: FitConfig, train_idx, test_idx):
    if config.obs_weights is not None:
        w = np.asarray(config.obs_weights, dtype=float)
        return w[train_idx], w[test_idx]
    if config.weights == "hard":
        ls = robust_location_scatter(train.X)
        return ls.weights(train.X), ls.weights(test.X)
    return np.ones(train.n), np.ones(test.n)


def cross_validate(dataset: Dataset, cv_config: CvConfig) -> CvResult:
    n, p = dataset.n, dataset.p
    K = cv_config.k_folds
    if K > n:
        raise ValueError(f"{K} folds for {n} observations")
    lambdas = np.asarray(cv_config.lambda_grid)
    L = lambdas.size
    folds = fold_partition(n, K, cv_config.rng_seed)
    base = replace(cv_config.fit, obs_weights=None)
    loss = base.loss

    classical = np.full((L, K), np.nan)
    robust = np.full((L, K), np.nan)
    coefs = np.full((L, K, p + 1), np.nan)
    not_conv = np.zeros((L, K), dtype=bool)
    failed = np.zeros((L, K), dtype=bool)

    for k, test_idx in enumerate(folds):
        train_idx = np.setdiff1d(np.arange(n), test_idx, assume_unique=True)
        train, test = dataset.rows(train_idx), dataset.rows(test_idx)
        w_train, w_test = _fold_weights(train, test, cv_config.fit, train_idx, test_idx)
        try:
            path = fit_path(train, base, lambdas, weights=w_train)
        except (FloatingPointError, ValueError, np.linalg.LinAlgError) as exc:
            log.warning("fold %d failed: %s", k, exc)
            failed[:, k] = True
            continue
        for i, res in enumerate(path):
            t = res.linear_predictor(test.X)
            coefs[i, k, 0] = res.intercept
            coefs[i, k, 1:] = res.beta
            not_conv[i, k] = not res.converged
            classical[i, k] = deviance(test.y, t).sum()
            robust[i, k] = (phi(loss, test.y, t) * w_test).sum()
        for arr in (classical, robust):
            bad = ~np.isfinite(arr[:, k])
            if bad.any():
                failed[bad, k] = True

    for arr in (classical, robust):
        for k in range(K):
            col = arr[:, k]
            bad = ~np.isfinite(col)
            if bad.any():
                finite = col[~bad]
                # a lambda that breaks the fit must not win by omission
                col[bad] = finite.max() if finite.size else np.inf
    cv_curve = classical.sum(axis=1) / n
    rcv_curve = robust.sum(axis=1) / n
    result = CvResult(lambdas=lambdas, criterion=cv_config.criterion, classical=cv_curve,
                      robust=rcv_curve, chosen_lambda=float("nan"), coefficients=coefs,
                      not_converged=not_conv, failed=failed, folds=folds)
    result.chosen_lambda = result.chosen(cv_config.criterion)
    return result


def lambda_max(dataset: Dataset, config: FitConfig, weights=None) -> float:
    """Sup-norm of the weighted score at the intercept-only fit.

    Above this value the LASSO keeps every slope at zero.
    """
    if weights is None:
        weights, _ = resolve_weights(dataset, config)
    weights = np.asarray(weights, dtype=float)
    gamma = 0.0
    if config.use_intercept:
        null_cfg = replace(config, penalty=PenaltySpec(), active_index_set=(), obs_weights=None)
        res = fit(dataset, null_cfg, start=null_start(dataset, config, weights), weights=weights)
        gamma = res.intercept
    score = Psi(config.loss, dataset.y, np.full(dataset.n, gamma)) * weights
    return float(np.abs(dataset.X.T @ score).max() / dataset.n)


def default_lambda_grid(dataset: Dataset, config: FitConfig, n_points: int = 20,
                        ratio: float = 1e-3, weights=None) -> np.ndarray:
    """Log-spaced increasing grid from lambda_max * ratio to lambda_max."""
    if n_points < 2:
        raise ValueError("n_points must be at least 2")
    lmax = lambda_max(dataset, config, weights)
    if not lmax > 0:
        raise ValueError("score vanishes at the null fit; no informative lambda range")
    grid = np.geomspace(lmax * ratio, lmax, n_points)
    grid[-1] = lmax
    return grid

