"""Logistic link, deviance and the bounded loss family used by the estimators.

The objective of a weighted M-estimator is the mean of

    phi(y, t) = rho(d(y, t)) + G(F(t)) + G(1 - F(t)),

where ``d`` is the deviance, ``rho`` bounds it and ``G(u) = int_0^u psi(-log v) dv``
restores Fisher consistency. ``Psi = d phi / dt`` and ``chi = d Psi / dt`` are
available in closed form for every loss kind.
"""

from __future__ import annotations

import enum
import functools
from dataclasses import dataclass

import numpy as np
from numba import njit

from . import _kernels as K

__all__ = [
    "LossKind",
    "LossSpec",
    "InformationMatrices",
    "SingularInformation",
    "logistic",
    "deviance",
    "rho",
    "rho_prime",
    "rho_second",
    "correction_G",
    "phi",
    "Psi",
    "nu",
    "nu_prime",
    "chi",
    "information_matrices",
]


class SingularInformation(np.linalg.LinAlgError):
    """Raised when the curvature matrix A is too ill-conditioned to invert."""


class LossKind(str, enum.Enum):
    DEVIANCE = "deviance"
    LEAST_SQUARES = "ls"
    CROUX = "croux"
    DIVERGENCE = "div"


_CODES = {
    LossKind.DEVIANCE: K.DEVIANCE,
    LossKind.LEAST_SQUARES: K.LEAST_SQUARES,
    LossKind.CROUX: K.CROUX,
    LossKind.DIVERGENCE: K.DIVERGENCE,
}


@dataclass(frozen=True)
class LossSpec:
    """Choice of rho. ``c`` is used by the Croux-Haesbroeck and divergence losses."""

    kind: LossKind = LossKind.CROUX
    c: float = 0.5

    def __post_init__(self):
        object.__setattr__(self, "kind", LossKind(self.kind))
        if self.tunable and not (np.isfinite(self.c) and self.c > 0):
            raise ValueError(f"tuning constant c must be positive, got {self.c!r}")

    @property
    def tunable(self) -> bool:
        return self.kind in (LossKind.CROUX, LossKind.DIVERGENCE)

    @property
    def code(self) -> int:
        return _CODES[self.kind]

    @property
    def bounded(self) -> bool:
        return self.kind is not LossKind.DEVIANCE

    def rho_sup(self) -> float:
        """sup of rho over [0, inf); infinite for the deviance."""
        if self.kind is LossKind.DEVIANCE:
            return np.inf
        if self.kind is LossKind.LEAST_SQUARES:
            return 1.0
        if self.kind is LossKind.CROUX:
            sc = np.sqrt(self.c)
            return float(np.exp(-sc) * (2 * (1 + sc) + self.c))
        return 1.0 + 1.0 / self.c

    def table(self):
        """Piecewise-quintic table of phi(1, .) used by the optimizer."""
        return _table(self.code, float(self.c))

    @classmethod
    def deviance(cls):
        return cls(LossKind.DEVIANCE)

    @classmethod
    def least_squares(cls):
        return cls(LossKind.LEAST_SQUARES)

    @classmethod
    def croux(cls, c=0.5):
        return cls(LossKind.CROUX, c)

    @classmethod
    def divergence(cls, c=0.5):
        return cls(LossKind.DIVERGENCE, c)


@functools.lru_cache(maxsize=32)
def _table(code, c):
    tab, meta = K.build_table(code, c, 0.02, 30.0)
    tab.setflags(write=False)
    meta.setflags(write=False)
    return tab, meta


# ------------------------------------------------------------ vectorized wrappers

@njit(cache=True)
def _map1(fn_id, kind, c, x):
    out = np.empty(x.shape[0])
    for i in range(x.shape[0]):
        v = x[i]
        if fn_id == 0:
            out[i] = K.rho(kind, c, v)
        elif fn_id == 1:
            out[i] = K.psi(kind, c, v)
        elif fn_id == 2:
            out[i] = K.psi_prime(kind, c, v)
        elif fn_id == 3:
            out[i] = K.G_neglog(kind, c, v)
        elif fn_id == 4:
            out[i] = K.nu(kind, c, v)
        elif fn_id == 5:
            out[i] = K.nu_prime(kind, c, v)
        else:
            out[i] = K.logistic(v)
    return out


@njit(cache=True)
def _map2(fn_id, kind, c, y, t):
    out = np.empty(t.shape[0])
    for i in range(t.shape[0]):
        if fn_id == 0:
            out[i] = K.phi(kind, c, y[i], t[i])
        elif fn_id == 1:
            out[i] = K.Psi(kind, c, y[i], t[i])
        elif fn_id == 2:
            out[i] = K.chi(kind, c, y[i], t[i])
        else:
            s = K.softplus(-t[i]) if y[i] > 0.5 else K.softplus(t[i])
            out[i] = s
    return out


def _apply1(fn_id, spec, x):
    x = np.asarray(x, dtype=float)
    out = _map1(fn_id, spec.code if spec is not None else 0,
                float(spec.c) if spec is not None else 0.0, np.ascontiguousarray(x.ravel()))
    return out.reshape(x.shape) if x.ndim else float(out[0])


def _apply2(fn_id, spec, y, t):
    y, t = np.broadcast_arrays(np.asarray(y, dtype=float), np.asarray(t, dtype=float))
    if not np.all((y == 0) | (y == 1)):
        raise ValueError("responses must be 0 or 1")
    code = spec.code if spec is not None else 0
    c = float(spec.c) if spec is not None else 0.0
    out = _map2(fn_id, code, c, np.ascontiguousarray(y.ravel()), np.ascontiguousarray(t.ravel()))
    return out.reshape(t.shape) if t.ndim else float(out[0])


def logistic(t):
    """F(t) = exp(t) / (1 + exp(t)), evaluated without overflow."""
    return _apply1(6, None, t)


def deviance(y, t):
    """d(y, t) = -y log F(t) - (1 - y) log(1 - F(t))."""
    return _apply2(3, None, y, t)


def _check_nonneg(t):
    t = np.asarray(t, dtype=float)
    if np.any(t < 0) or np.any(np.isnan(t)):
        raise ValueError("rho is defined on [0, inf)")
    return t


def rho(spec: LossSpec, t):
    return _apply1(0, spec, _check_nonneg(t))


def rho_prime(spec: LossSpec, t):
    """psi = rho'."""
    return _apply1(1, spec, _check_nonneg(t))


def rho_second(spec: LossSpec, t):
    """psi' = rho''. For the Croux-Haesbroeck loss the right derivative at t = c."""
    return _apply1(2, spec, _check_nonneg(t))


def correction_G(spec: LossSpec, u):
    """G(u) = int_0^u psi(-log v) dv for u in [0, 1].

    Closed forms: u for the deviance, u**2 / 2 for least squares, u**(c+1) for
    the divergence loss; the Croux-Haesbroeck integral reduces to an erfc
    expression below exp(-c) and is linear above it.
    """
    u = np.asarray(u, dtype=float)
    if np.any(u < 0) or np.any(u > 1) or np.any(np.isnan(u)):
        raise ValueError("G is defined on [0, 1]")
    with np.errstate(divide="ignore"):
        s = -np.log(u)
    return _apply1(3, spec, s)


def phi(spec: LossSpec, y, t):
    return _apply2(0, spec, y, t)


def Psi(spec: LossSpec, y, t):
    """d phi / dt = -(y - F(t)) nu(t)."""
    return _apply2(1, spec, y, t)


def chi(spec: LossSpec, y, t):
    """d Psi / dt = F(1 - F) nu(t) - (y - F) nu'(t)."""
    return _apply2(2, spec, y, t)


def nu(spec: LossSpec, t):
    return _apply1(4, spec, t)


def nu_prime(spec: LossSpec, t):
    return _apply1(5, spec, t)


# ------------------------------------------------------------ information matrices

@dataclass(frozen=True)
class InformationMatrices:
    A: np.ndarray
    B: np.ndarray
    sandwich: np.ndarray | None


def information_matrices(X, coefficients, spec: LossSpec, weights=None, *,
                         intercept=None, active=None, cond_max=1e12, strict=True):
    """Plug-in curvature ``A``, score variance ``B`` and sandwich ``A^-1 B A^-1``.

    Parameters
    ----------
    X : (n, p) array
        Design matrix; include a column of ones yourself or pass ``intercept``.
    coefficients : (p,) array
        Slope coefficients at which the matrices are evaluated.
    spec : LossSpec
    weights : (n,) array, optional
        Observation weights w(x_i); ones when omitted.
    intercept : float, optional
        When given, a leading column of ones is added and this value is used as
        its coefficient.
    active : sequence of int, optional
        Restrict to these columns of the (possibly augmented) design, which
        gives the oracle-submodel covariance.
    strict : bool
        Raise :class:`SingularInformation` when ``cond(A) > cond_max``; otherwise
        return ``sandwich=None``.
    """
    X = np.asarray(X, dtype=float)
    beta = np.asarray(coefficients, dtype=float)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValueError("X must be a non-empty 2-d array")
    if X.shape[1] != beta.shape[0]:
        raise ValueError("dimension mismatch between X and coefficients")
    t = X @ beta
    if intercept is not None:
        t = t + intercept
        X = np.column_stack([np.ones(X.shape[0]), X])
    n = X.shape[0]
    w = np.ones(n) if weights is None else np.asarray(weights, dtype=float)
    if active is not None:
        X = X[:, np.asarray(active, dtype=int)]
    F = logistic(t)
    v = nu(spec, t)
    base = F * (1.0 - F)
    a_fac = base * v * w
    b_fac = base * v * v * w * w
    A = (X * a_fac[:, None]).T @ X / n
    B = (X * b_fac[:, None]).T @ X / n
    A = 0.5 * (A + A.T)
    B = 0.5 * (B + B.T)
    sandwich = None
    if A.shape[0]:
        cond = np.linalg.cond(A)
        if np.isfinite(cond) and cond <= cond_max:
            Ainv = np.linalg.inv(A)
            sandwich = Ainv @ B @ Ainv
            sandwich = 0.5 * (sandwich + sandwich.T)
        elif strict:
            raise SingularInformation(f"condition number of A is {cond:.3g}")
    else:
        sandwich = np.zeros((0, 0))
    return InformationMatrices(A=A, B=B, sandwich=sandwich)
