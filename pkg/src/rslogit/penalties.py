"""Regularization terms I_lambda(beta).

Families: LASSO, Ridge, Elastic Net, Bridge (q >= 1), SCAD, MCP, the scale
invariant Sign penalty lambda * ||beta||_1 / ||beta||_2, and an adaptive LASSO.
The intercept is never an argument of these functions.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K

__all__ = [
    "PenaltyFamily",
    "PenaltySpec",
    "penalty_value",
    "penalty_univariate_profile",
    "PenaltyProfile",
    "scad_scalar",
    "mcp_scalar",
    "adaptive_weights",
]


class PenaltyFamily(str, enum.Enum):
    NONE = "none"
    LASSO = "lasso"
    RIDGE = "ridge"
    ELASTIC_NET = "enet"
    BRIDGE = "bridge"
    SCAD = "scad"
    MCP = "mcp"
    SIGN = "sign"
    ADALASSO = "adalasso"


_CODES = {
    PenaltyFamily.NONE: K.P_NONE,
    PenaltyFamily.LASSO: K.P_LASSO,
    PenaltyFamily.RIDGE: K.P_RIDGE,
    PenaltyFamily.ELASTIC_NET: K.P_ENET,
    PenaltyFamily.BRIDGE: K.P_BRIDGE,
    PenaltyFamily.SCAD: K.P_SCAD,
    PenaltyFamily.MCP: K.P_MCP,
    PenaltyFamily.SIGN: K.P_SIGN,
    # weighted L1: the weights travel as per-coordinate lambda multipliers
    PenaltyFamily.ADALASSO: K.P_LASSO,
}

_DEFAULT_A = {PenaltyFamily.SCAD: 3.7, PenaltyFamily.MCP: 3.0}


@dataclass(frozen=True)
class PenaltySpec:
    """Penalty family and parameters.

    ``a`` defaults to 3.7 for SCAD and 3 for MCP. ``adaptive_weights`` is only
    read by the adaptive LASSO; when it is left empty the optimizer fills it
    from the initial estimator (see :func:`adaptive_weights`).
    """

    family: PenaltyFamily = PenaltyFamily.NONE
    lam: float = 0.0
    theta: float = 1.0
    a: float | None = None
    q: float = 1.0
    adaptive_weights: np.ndarray | None = field(default=None, compare=False)
    ada_gamma: float = 1.0
    ada_delta: float = 1e-6

    def __post_init__(self):
        fam = PenaltyFamily(self.family)
        object.__setattr__(self, "family", fam)
        if self.a is None:
            object.__setattr__(self, "a", _DEFAULT_A.get(fam, 3.7))
        if not (np.isfinite(self.lam) and self.lam >= 0):
            raise ValueError(f"lambda must be a non-negative number, got {self.lam!r}")
        if fam is PenaltyFamily.ELASTIC_NET and not 0.0 <= self.theta <= 1.0:
            raise ValueError("elastic net theta must lie in [0, 1]")
        if fam is PenaltyFamily.SCAD and not self.a > 2:
            raise ValueError("SCAD needs a > 2")
        if fam is PenaltyFamily.MCP and not self.a > 0:
            raise ValueError("MCP needs a > 0")
        if fam is PenaltyFamily.BRIDGE and not self.q >= 1:
            raise ValueError("Bridge is supported for q >= 1 only")
        if self.adaptive_weights is not None:
            aw = np.asarray(self.adaptive_weights, dtype=float)
            if aw.ndim != 1 or not np.all(np.isfinite(aw)) or np.any(aw < 0):
                raise ValueError("adaptive weights must be a finite non-negative vector")
            object.__setattr__(self, "adaptive_weights", aw)

    @property
    def code(self) -> int:
        # a zero lambda switches the penalty off entirely
        if self.lam == 0.0:
            return K.P_NONE
        return _CODES[self.family]

    @property
    def nonconvex(self) -> bool:
        return self.family in (PenaltyFamily.SCAD, PenaltyFamily.MCP, PenaltyFamily.SIGN)

    def lam_scale(self, p: int) -> np.ndarray:
        if self.family is PenaltyFamily.ADALASSO:
            if self.adaptive_weights is None:
                raise ValueError("adaptive LASSO needs adaptive_weights")
            if self.adaptive_weights.shape[0] != p:
                raise ValueError("adaptive weights have the wrong length")
            return self.adaptive_weights
        return np.ones(p)

    def with_lambda(self, lam: float) -> "PenaltySpec":
        return PenaltySpec(self.family, lam, self.theta, self.a, self.q,
                           self.adaptive_weights, self.ada_gamma, self.ada_delta)

    def with_weights(self, weights) -> "PenaltySpec":
        return PenaltySpec(self.family, self.lam, self.theta, self.a, self.q,
                           weights, self.ada_gamma, self.ada_delta)


def adaptive_weights(beta_init, gamma=1.0, delta=1e-6):
    """w_j = 1 / (|beta_init_j|**gamma + delta)."""
    return 1.0 / (np.abs(np.asarray(beta_init, dtype=float)) ** gamma + delta)


def _kargs(spec, p):
    return (spec.code, float(spec.lam), spec.lam_scale(p), float(spec.theta),
            float(spec.a), float(spec.q))


def penalty_value(spec: PenaltySpec, beta) -> float:
    beta = np.ascontiguousarray(beta, dtype=float)
    if beta.ndim != 1 or beta.shape[0] < 1:
        raise ValueError("beta must be a non-empty vector")
    fam, lam, scale, theta, a, q = _kargs(spec, beta.shape[0])
    return float(K.penalty_total(fam, lam, scale, theta, a, q, beta))


class PenaltyProfile:
    """v -> I_lambda(beta with beta_j = v), with per-coordinate terms cached.

    Separable families answer in O(1); the Sign penalty keeps running l1 and
    squared l2 sums.
    """

    def __init__(self, spec: PenaltySpec, beta):
        self.spec = spec
        self.beta = np.array(beta, dtype=float)
        p = self.beta.shape[0]
        self._args = _kargs(spec, p)
        fam, lam, scale, theta, a, q = self._args
        if spec.family is PenaltyFamily.SIGN:
            self._l1 = float(np.abs(self.beta).sum())
            self._l2 = float(self.beta @ self.beta)
        else:
            self._terms = np.array([K.separable_term(fam, lam * scale[k], theta, a, q, self.beta[k])
                                    for k in range(p)])
            self._total = float(self._terms.sum())

    def __call__(self, j: int, v: float) -> float:
        fam, lam, scale, theta, a, q = self._args
        bj = self.beta[j]
        if self.spec.family is PenaltyFamily.SIGN:
            if fam == K.P_NONE:
                return 0.0
            s1 = self._l1 - abs(bj) + abs(v)
            s2 = self._l2 - bj * bj + v * v
            if s1 <= 0.0:
                return 0.0
            return lam * s1 / np.sqrt(max(s2, 0.0))
        return self._total - self._terms[j] + K.separable_term(fam, lam * scale[j], theta, a, q, v)


def penalty_univariate_profile(spec: PenaltySpec, beta, j: int, v: float) -> float:
    beta = np.asarray(beta, dtype=float)
    if not 0 <= j < beta.shape[0]:
        raise IndexError(j)
    return PenaltyProfile(spec, beta)(j, v)


def scad_scalar(lam, a, b):
    return K.scad_scalar(float(lam), float(a), float(b))


def mcp_scalar(lam, a, b):
    return K.mcp_scalar(float(lam), float(a), float(b))
