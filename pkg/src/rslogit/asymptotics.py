"""Plug-in sandwich covariance and Wald standard errors for fitted models."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats

from .losses import LossSpec, information_matrices
from .optimizer import Dataset, FitResult

__all__ = ["SandwichResult", "sandwich_covariance", "wald_intervals"]


@dataclass(frozen=True)
class SandwichResult:
    """Asymptotic covariances of sqrt(n)(theta_hat - theta).

    Coordinates are ``names``: ``"intercept"`` first when the model has one,
    then slope indices. ``active`` covers the intercept and the nonzero slopes.
    """

    names: tuple
    full: np.ndarray | None
    active_names: tuple
    active: np.ndarray
    n: int

    def std_errors(self, restricted: bool = True) -> dict:
        """sqrt(diag(Sigma) / n), keyed like ``names``."""
        names, cov = (self.active_names, self.active) if restricted else (self.names, self.full)
        if cov is None:
            raise ValueError("full sandwich is singular")
        se = np.sqrt(np.clip(np.diag(cov), 0.0, None) / self.n)
        return dict(zip(names, se.tolist()))


def sandwich_covariance(dataset: Dataset, fit: FitResult, loss: LossSpec | None = None,
                        weights=None) -> SandwichResult:
    """A^-1 B A^-1 at the fitted coefficients, over all and over the active coordinates.

    The active-set matrix is computed from the columns of the active coordinates
    only, the oracle-submodel version that applies after consistent selection.
    The full matrix may be singular under sparsity (then ``full`` is None); a
    singular active-set matrix raises :class:`SingularInformation`.
    """
    if loss is None:
        if fit.config is None:
            raise ValueError("loss is required when the fit carries no config")
        loss = fit.config.loss
    w = fit.weights if weights is None else np.asarray(weights, dtype=float)
    use_intercept = fit.config is None or fit.config.use_intercept
    gamma = fit.intercept if use_intercept else None
    offset = 1 if use_intercept else 0
    names = (("intercept",) if use_intercept else ()) + tuple(range(dataset.p))

    full = information_matrices(dataset.X, fit.beta, loss, w, intercept=gamma,
                                strict=False).sandwich
    idx = list(range(offset)) + [j + offset for j in fit.active_set]
    active = information_matrices(dataset.X, fit.beta, loss, w, intercept=gamma,
                                  active=idx).sandwich
    active_names = tuple(names[i] for i in idx)
    return SandwichResult(names=names, full=full, active_names=active_names, active=active,
                          n=dataset.n)


def wald_intervals(fit: FitResult, result: SandwichResult, level: float = 0.95) -> dict:
    """Two-sided Wald intervals for the active coordinates."""
    z = stats.norm.ppf(0.5 + level / 2)
    se = result.std_errors()
    values = {"intercept": fit.intercept, **{j: fit.beta[j] for j in range(fit.beta.size)}}
    return {k: (values[k] - z * s, values[k] + z * s) for k, s in se.items()}
