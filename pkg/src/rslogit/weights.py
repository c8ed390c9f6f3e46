"""Leverage weights w(x) = W(D^2(x, mu, Sigma^-1)) with hard rejection.

The center is the spatial (L1) median. The scatter is a shrunken robust
covariance built from MAD scales and rank correlations measured along the
principal axes of the spatial-sign covariance, which keeps the Mahalanobis
distances invariant under translations and orthogonal rotations of the data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

__all__ = [
    "DegenerateScatter",
    "RobustLocationScatter",
    "l1_median",
    "robust_precision",
    "robust_location_scatter",
    "mahalanobis_sq",
    "hard_rejection_weights",
    "cutoff_ratio",
    "min_shrinkage",
]

MAD_CONSISTENCY = 1.4826
SHRINK_LEVELS = (0.01, 0.05, 0.1, 0.2, 0.5)
MAX_CONDITION = 1e8
# Gaussian efficiency of the MAD; scales n into an effective sample size
MAD_EFFICIENCY = 0.37


class DegenerateScatter(ValueError):
    """A covariate has no spread, robust or otherwise."""


@dataclass(frozen=True)
class RobustLocationScatter:
    center: np.ndarray
    precision: np.ndarray
    cutoff: float

    def distances(self, X):
        return mahalanobis_sq(X, self.center, self.precision)

    def weights(self, X):
        return (self.distances(X) <= self.cutoff).astype(float)


def l1_median(X, tol=1e-9, max_iter=10_000):
    """Spatial median by Weiszfeld iterations (Vardi-Zhang step at data points).

    The iterations run on the data recentered at the coordinate-wise median,
    so a translation of X only shifts the answer. Stops when the step is below
    ``tol * (1 + ||mu||)`` in those coordinates.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    n = X.shape[0]
    if n == 0:
        raise ValueError("empty sample")
    if n == 1:
        return X[0].copy()
    origin = np.median(X, axis=0)
    return origin + _weiszfeld(X - origin, tol, max_iter)


def _weiszfeld(X, tol, max_iter):
    n = X.shape[0]
    mu = np.zeros(X.shape[1])
    for _ in range(max_iter):
        diff = X - mu
        dist = np.linalg.norm(diff, axis=1)
        at = dist <= 1e-12 * (1.0 + np.linalg.norm(mu))
        inv = np.zeros(n)
        inv[~at] = 1.0 / dist[~at]
        if not inv.any():
            return mu
        T = (X[~at] * inv[~at, None]).sum(axis=0) / inv.sum()
        eta = int(at.sum())
        if eta:
            r_vec = (diff[~at] * inv[~at, None]).sum(axis=0)
            r = np.linalg.norm(r_vec)
            if r <= eta:
                # sitting on a data point that is already the minimizer
                return mu
            gamma = min(1.0, eta / r)
            new = (1.0 - gamma) * T + gamma * mu
        else:
            new = T
        step = np.linalg.norm(new - mu)
        mu = new
        if step < tol * (1.0 + np.linalg.norm(mu)):
            break
    return mu


def _robust_scales(Z):
    med = np.median(Z, axis=0)
    mad = MAD_CONSISTENCY * np.median(np.abs(Z - med), axis=0)
    bad = mad <= 0
    if bad.any():
        sd = Z[:, bad].std(axis=0, ddof=1) if Z.shape[0] > 1 else np.zeros(bad.sum())
        if np.any(sd <= 0):
            raise DegenerateScatter("a covariate has zero MAD and zero standard deviation")
        mad = mad.copy()
        mad[bad] = sd
    return mad


def _rank_correlation(Z):
    p = Z.shape[1]
    if p == 1:
        return np.ones((1, 1))
    rs = np.asarray(stats.spearmanr(Z).statistic, dtype=float)
    if rs.ndim == 0:
        # two columns give back a single coefficient
        rs = np.array([[1.0, rs], [rs, 1.0]])
    rs = np.nan_to_num(rs, nan=0.0)
    # Gaussian-consistent correlation from Spearman's rho
    R = 2.0 * np.sin(np.pi * rs / 6.0)
    np.fill_diagonal(R, 1.0)
    return R


def _sign_axes(X, center):
    D = X - center
    norms = np.linalg.norm(D, axis=1)
    keep = norms > 0
    U = D[keep] / norms[keep, None]
    if U.shape[0] == 0:
        return np.eye(X.shape[1])
    sscm = U.T @ U / U.shape[0]
    _, vecs = np.linalg.eigh(sscm)
    return vecs


def min_shrinkage(n: int, p: int) -> float:
    """p / (p + 0.37 n): the noise-to-signal ratio of the pairwise scatter.

    Without it a p = 40, n = 150 sample spreads the eigenvalues so much that a
    tight outlying cluster hides inside the inflated directions.
    """
    return p / (p + MAD_EFFICIENCY * n)


def robust_precision(X, center=None):
    """Inverse of a shrunken MAD / rank-correlation scatter estimate.

    With S = D R D (MAD scales D, Spearman-based correlations R, both computed
    on the data expressed in the spatial-sign principal axes and rotated back),
    the returned matrix is ``inv((1 - s) S + s tr(S)/p I)`` for the smallest
    ``s`` in ``SHRINK_LEVELS`` that gives a condition number at most 1e8 and is
    not below ``min_shrinkage(n, p)``.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    n, p = X.shape
    if n < 2:
        raise ValueError("need at least two observations")
    if center is None:
        center = l1_median(X)
    V = _sign_axes(X, center) if p > 1 else np.ones((1, 1))
    Z = (X - center) @ V
    scales = _robust_scales(Z)
    R = _rank_correlation(Z)
    S_axes = R * np.outer(scales, scales)
    S = V @ S_axes @ V.T
    S = 0.5 * (S + S.T)
    ident = np.eye(p)
    avg = np.trace(S) / p
    floor = min_shrinkage(n, p)
    for s in SHRINK_LEVELS:
        if s < floor and s != SHRINK_LEVELS[-1]:
            continue
        Sh = (1.0 - s) * S + s * avg * ident
        ev = np.linalg.eigvalsh(Sh)
        if ev[0] > 0 and ev[-1] / ev[0] <= MAX_CONDITION:
            P = np.linalg.inv(Sh)
            return 0.5 * (P + P.T)
    raise DegenerateScatter("robust scatter stays ill-conditioned after maximal shrinkage")


def mahalanobis_sq(X, center, precision):
    D = np.asarray(X, dtype=float) - center
    if D.ndim == 1:
        D = D[:, None]
    return np.einsum("ij,jk,ik->i", D, precision, D)


def cutoff_ratio(p: int) -> float:
    """chi2_{p,0.95} / chi2_{p,0.5}: scales the median distance into a 95% cutoff."""
    return float(stats.chi2.ppf(0.95, p) / stats.chi2.ppf(0.5, p))


def _guarded_precision(X, center):
    try:
        return robust_precision(X, center)
    except DegenerateScatter:
        # constant covariates carry no leverage information; measure the rest
        p = X.shape[1]
        keep = np.flatnonzero(X.std(axis=0) > 0)
        precision = np.zeros((p, p))
        if keep.size:
            precision[np.ix_(keep, keep)] = robust_precision(X[:, keep], center[keep])
        return precision


def robust_location_scatter(X) -> RobustLocationScatter:
    """L1-median, robust precision and the median-calibrated cutoff c_w."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    center = l1_median(X)
    precision = _guarded_precision(X, center)
    d2 = mahalanobis_sq(X, center, precision)
    med = float(np.median(d2))
    cutoff = med * cutoff_ratio(X.shape[1])
    if not cutoff > 0:
        # all points (or more than half) sit on the center
        cutoff = math.ulp(1.0)
    return RobustLocationScatter(center=center, precision=precision, cutoff=cutoff)


def hard_rejection_weights(X, loc_scatter: RobustLocationScatter | None = None):
    """w_i = 1 if D^2(x_i) <= c_w else 0."""
    X = np.asarray(X, dtype=float)
    if loc_scatter is None:
        loc_scatter = robust_location_scatter(X)
    return loc_scatter.weights(X)
