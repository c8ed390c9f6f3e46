import math

import numpy as np
import pytest

from rslogit.penalties import (
    PenaltyFamily,
    PenaltySpec,
    adaptive_weights,
    mcp_scalar,
    penalty_univariate_profile,
    penalty_value,
    scad_scalar,
)


def oracle(family, lam, beta, theta=1.0, a=None, q=1.0, w=None):
    """Direct transcription of each penalty, written without the package kernels."""
    b = np.abs(np.asarray(beta, dtype=float))
    if family == "none":
        return 0.0
    if family == "lasso":
        return lam * b.sum()
    if family == "adalasso":
        return lam * float(np.dot(w, b))
    if family == "ridge":
        return lam / 2 * (b ** 2).sum()
    if family == "enet":
        return lam * (theta * b.sum() + (1 - theta) / 2 * (b ** 2).sum())
    if family == "bridge":
        return lam * (b ** q).sum()
    if family == "scad":
        a = 3.7 if a is None else a
        tot = 0.0
        for v in b:
            if v <= lam:
                tot += lam * v
            elif v <= a * lam:
                tot += (a * lam * v - 0.5 * (v * v + lam * lam)) / (a - 1)
            else:
                tot += lam * lam * (a * a - 1) / (2 * (a - 1))
        return tot
    if family == "mcp":
        a = 3.0 if a is None else a
        return sum(lam * v - v * v / (2 * a) if v <= a * lam else a * lam * lam / 2 for v in b)
    if family == "sign":
        n2 = math.sqrt((b ** 2).sum())
        return 0.0 if n2 == 0 else lam * b.sum() / n2
    raise KeyError(family)


FAMILIES = ["none", "lasso", "ridge", "enet", "bridge", "scad", "mcp", "sign", "adalasso"]


def _spec(family, lam, p, **kw):
    if family == "adalasso":
        kw.setdefault("adaptive_weights", np.linspace(0.5, 2.0, p))
    if family == "enet":
        kw.setdefault("theta", 0.3)
    if family == "bridge":
        kw.setdefault("q", 1.5)
    return PenaltySpec(family, lam, **kw)


def test_sign_examples():
    assert penalty_value(PenaltySpec("sign", 1.0), np.eye(5)[0]) == 1.0
    assert penalty_value(PenaltySpec("sign", 1.0), np.ones(9)) == pytest.approx(3.0, abs=1e-15)
    assert penalty_value(PenaltySpec("sign", 1.0), np.zeros(4)) == 0.0


def test_scad_third_branch():
    beta = np.zeros(3)
    beta[1] = 10.0
    expected = 0.5 ** 2 * (3.7 ** 2 - 1) / (2 * 2.7)
    assert penalty_value(PenaltySpec("scad", 0.5), beta) == pytest.approx(expected, rel=1e-15)


def test_scalar_examples():
    assert scad_scalar(0.3, 3.7, 0.0) == 0.0
    assert mcp_scalar(0.3, 3.0, 0.0) == 0.0
    assert mcp_scalar(0.5, 3.0, 10.0) == pytest.approx(0.375, abs=1e-15)


@pytest.mark.parametrize("knot", [0.3, 0.3 * 3.7])
def test_scad_continuity_at_knots(knot):
    lo, hi = np.nextafter(knot, 0), np.nextafter(knot, 1)
    assert abs(scad_scalar(0.3, 3.7, lo) - scad_scalar(0.3, 3.7, hi)) < 1e-12
    h = 1e-7
    dl = (scad_scalar(0.3, 3.7, knot) - scad_scalar(0.3, 3.7, knot - h)) / h
    dr = (scad_scalar(0.3, 3.7, knot + h) - scad_scalar(0.3, 3.7, knot)) / h
    assert abs(dl - dr) < 1e-5


def test_mcp_continuity_at_knot():
    knot = 3.0 * 0.3
    assert abs(mcp_scalar(0.3, 3.0, np.nextafter(knot, 0))
               - mcp_scalar(0.3, 3.0, np.nextafter(knot, 1))) < 1e-12


@pytest.mark.parametrize("fn,a", [(scad_scalar, 3.7), (mcp_scalar, 3.0)])
def test_flat_beyond_a_lambda(fn, a):
    lam = 0.4
    for b in np.linspace(a * lam + 1e-3, 20, 50):
        assert fn(lam, a, b + 1e-6) - fn(lam, a, b) == 0.0


@pytest.mark.parametrize("family", FAMILIES)
def test_penalty_matches_oracle(family):
    rng = np.random.default_rng(11)
    for _ in range(50):
        p = int(rng.integers(1, 8))
        beta = rng.standard_normal(p) * rng.choice([0.1, 1.0, 5.0])
        beta[rng.random(p) < 0.3] = 0.0
        lam = float(rng.uniform(0, 2))
        spec = _spec(family, lam, p)
        got = penalty_value(spec, beta)
        want = oracle(family, lam, beta, theta=spec.theta, a=spec.a, q=spec.q,
                      w=spec.adaptive_weights)
        assert got == pytest.approx(want, rel=1e-12, abs=1e-14)


@pytest.mark.parametrize("family", FAMILIES)
def test_profile_matches_substitution(family):
    rng = np.random.default_rng(12)
    for _ in range(100):
        p = int(rng.integers(1, 7))
        beta = rng.standard_normal(p)
        beta[rng.random(p) < 0.3] = 0.0
        j = int(rng.integers(p))
        v = float(rng.standard_normal()) if rng.random() > 0.2 else 0.0
        spec = _spec(family, 0.7, p)
        sub = beta.copy()
        sub[j] = v
        assert penalty_univariate_profile(spec, beta, j, v) == pytest.approx(
            penalty_value(spec, sub), rel=1e-12, abs=1e-14)


def test_lasso_profile_is_affine_in_abs_v():
    beta = np.array([0.5, -2.0, 1.0])
    spec = PenaltySpec("lasso", 0.8)
    base = penalty_univariate_profile(spec, beta, 1, 0.0)
    for v in (-3.0, -0.2, 0.7, 4.0):
        assert penalty_univariate_profile(spec, beta, 1, v) - base == pytest.approx(0.8 * abs(v))


def test_sign_profile_at_zero():
    beta = np.array([0.5, -2.0, 1.0])
    rest = np.array([0.5, 1.0])
    val = penalty_univariate_profile(PenaltySpec("sign", 1.3), beta, 1, 0.0)
    assert val == pytest.approx(1.3 * np.abs(rest).sum() / np.linalg.norm(rest))
    assert penalty_univariate_profile(PenaltySpec("sign", 1.3), np.eye(3)[1], 1, 0.0) == 0.0


def test_profile_bad_index():
    with pytest.raises(IndexError):
        penalty_univariate_profile(PenaltySpec("lasso", 1.0), np.ones(3), 3, 0.0)


@pytest.mark.parametrize("family", FAMILIES)
def test_zero_lambda_is_zero(family):
    beta = np.array([1.0, -2.0, 0.0])
    assert penalty_value(_spec(family, 0.0, 3), beta) == 0.0


@pytest.mark.parametrize("family", FAMILIES)
def test_nonnegative_and_zero_at_origin(family):
    rng = np.random.default_rng(13)
    spec = _spec(family, 1.1, 4)
    assert penalty_value(spec, np.zeros(4)) == 0.0
    for _ in range(30):
        assert penalty_value(spec, rng.standard_normal(4) * 3) >= 0.0


@pytest.mark.parametrize("kw", [
    dict(family="lasso", lam=-1.0),
    dict(family="lasso", lam=float("nan")),
    dict(family="enet", lam=1.0, theta=1.5),
    dict(family="scad", lam=1.0, a=2.0),
    dict(family="mcp", lam=1.0, a=0.0),
    dict(family="bridge", lam=1.0, q=0.5),
    dict(family="adalasso", lam=1.0, adaptive_weights=np.array([1.0, -1.0])),
    dict(family="adalasso", lam=1.0, adaptive_weights=np.array([1.0, np.inf])),
    dict(family="cauchy", lam=1.0),
])
def test_validation(kw):
    with pytest.raises(ValueError):
        PenaltySpec(**kw)


def test_adalasso_needs_weights():
    with pytest.raises(ValueError):
        penalty_value(PenaltySpec("adalasso", 1.0), np.ones(3))
    with pytest.raises(ValueError):
        penalty_value(PenaltySpec("adalasso", 1.0, adaptive_weights=np.ones(2)), np.ones(3))


def test_defaults_and_weights():
    assert PenaltySpec("scad").a == 3.7
    assert PenaltySpec("mcp").a == 3.0
    assert PenaltySpec("mcp", 1.0) == PenaltySpec(PenaltyFamily.MCP, 1.0)
    np.testing.assert_allclose(adaptive_weights([2.0, 0.0, -0.5]), [1 / (2 + 1e-6), 1e6, 1 / (0.5 + 1e-6)])
    np.testing.assert_allclose(adaptive_weights([2.0], gamma=2, delta=0.0), [0.25])
