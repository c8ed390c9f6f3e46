"""Compiled scalar kernels shared by the loss, penalty and optimizer modules.

Everything here is written against plain floats and integer codes so that numba
can compile it in nopython mode. The public, array-friendly wrappers live in
:mod:`rslogit.losses` and :mod:`rslogit.penalties`.
"""

import math

import numpy as np
from numba import njit

# loss codes
DEVIANCE = 0
LEAST_SQUARES = 1
CROUX = 2
DIVERGENCE = 3

# penalty codes
P_NONE = 0
P_LASSO = 1
P_RIDGE = 2
P_ENET = 3
P_BRIDGE = 4
P_SCAD = 5
P_MCP = 6
P_SIGN = 7

# line-search penalty modes
LINE_NONE = 0
LINE_COORD = 1
LINE_SCALE = 2

_SQRT_PI_2 = 0.5 * math.sqrt(math.pi)
_E_QUARTER = math.exp(0.25)


@njit(cache=True)
def softplus(t):
    """log(1 + exp(t)) without overflow."""
    if t > 0.0:
        return t + math.log1p(math.exp(-t))
    return math.log1p(math.exp(t))


@njit(cache=True)
def logistic(t):
    if t >= 0.0:
        return 1.0 / (1.0 + math.exp(-t))
    e = math.exp(t)
    return e / (1.0 + e)


@njit(cache=True)
def rho(kind, c, t):
    if kind == DEVIANCE:
        return t
    if kind == LEAST_SQUARES:
        return -math.expm1(-t)
    if kind == CROUX:
        if t <= c:
            return t * math.exp(-math.sqrt(c))
        sq = math.sqrt(t)
        sc = math.sqrt(c)
        return -2.0 * math.exp(-sq) * (1.0 + sq) + math.exp(-sc) * (2.0 * (1.0 + sc) + c)
    return (1.0 + 1.0 / c) * (-math.expm1(-c * t))


@njit(cache=True)
def psi(kind, c, t):
    if kind == DEVIANCE:
        return 1.0
    if kind == LEAST_SQUARES:
        return math.exp(-t)
    if kind == CROUX:
        if t <= c:
            return math.exp(-math.sqrt(c))
        return math.exp(-math.sqrt(t))
    return (c + 1.0) * math.exp(-c * t)


@njit(cache=True)
def psi_prime(kind, c, t):
    if kind == DEVIANCE:
        return 0.0
    if kind == LEAST_SQUARES:
        return -math.exp(-t)
    if kind == CROUX:
        if t <= c:
            return 0.0
        sq = math.sqrt(t)
        return -math.exp(-sq) / (2.0 * sq)
    return -c * (c + 1.0) * math.exp(-c * t)


@njit(cache=True)
def _croux_G_tail(s):
    # integral of exp(-sqrt(-log v)) over v in [0, exp(-s)], valid for s >= c
    x = math.sqrt(s) + 0.5
    return _E_QUARTER * (math.exp(-x * x) - _SQRT_PI_2 * math.erfc(x))


@njit(cache=True)
def G_neglog(kind, c, s):
    """Correction term G(u) evaluated at u = exp(-s), s >= 0 (s may be +inf)."""
    if kind == DEVIANCE:
        return math.exp(-s)
    if kind == LEAST_SQUARES:
        return 0.5 * math.exp(-2.0 * s)
    if kind == CROUX:
        if s >= c:
            if s == math.inf:
                return 0.0
            return _croux_G_tail(s)
        return _croux_G_tail(c) + math.exp(-math.sqrt(c)) * (math.exp(-s) - math.exp(-c))
    return math.exp(-(c + 1.0) * s)


@njit(cache=True)
def phi(kind, c, y, t):
    """rho(d(y, t)) + G(F(t)) + G(1 - F(t))."""
    s1 = softplus(-t)  # -log F(t)
    s0 = softplus(t)   # -log(1 - F(t))
    d = s1 if y > 0.5 else s0
    if kind == DEVIANCE:
        return d + 1.0
    return rho(kind, c, d) + G_neglog(kind, c, s1) + G_neglog(kind, c, s0)


@njit(cache=True)
def nu(kind, c, t):
    F = logistic(t)
    Fc = logistic(-t)
    if kind == DEVIANCE:
        return 1.0
    return psi(kind, c, softplus(-t)) * Fc + psi(kind, c, softplus(t)) * F


@njit(cache=True)
def nu_prime(kind, c, t):
    if kind == DEVIANCE:
        return 0.0
    F = logistic(t)
    Fc = logistic(-t)
    s1 = softplus(-t)
    s0 = softplus(t)
    return (-psi_prime(kind, c, s1) * Fc * Fc - psi(kind, c, s1) * F * Fc
            + psi_prime(kind, c, s0) * F * F + psi(kind, c, s0) * F * Fc)


@njit(cache=True)
def Psi(kind, c, y, t):
    return -(y - logistic(t)) * nu(kind, c, t)


@njit(cache=True)
def chi(kind, c, y, t):
    F = logistic(t)
    Fc = logistic(-t)
    return F * Fc * nu(kind, c, t) - (y - F) * nu_prime(kind, c, t)


# ---------------------------------------------------------------- phi table
#
# phi(1, t) is tabulated on a uniform grid by quintic Hermite pieces built from
# phi, Psi and chi; phi(0, t) = phi(1, -t). For the Croux-Haesbroeck loss the
# grid is shifted so that both points where psi' jumps are knots.

@njit(cache=True)
def _kink_offset(kind, c):
    if kind != CROUX:
        return 0.0
    # F(t) = exp(-c)  <=>  -log F(t) = c
    return abs(math.log(math.exp(-c) / -math.expm1(-c)))


@njit(cache=True)
def build_table(kind, c, h_target, tmax):
    a = _kink_offset(kind, c)
    if a > 0.0:
        nb = max(1, int(math.ceil(2.0 * a / h_target)))
        h = 2.0 * a / nb
        t0 = -a - h * math.ceil((tmax - a) / h)
    else:
        h = h_target
        t0 = -h * math.ceil(tmax / h)
    nint = int(math.ceil((-t0 - t0) / h))
    tab = np.empty((nint, 6))
    eps = 1e-9 * h
    for k in range(nint):
        ta = t0 + k * h
        tb = ta + h
        f0 = phi(kind, c, 1.0, ta)
        d0 = Psi(kind, c, 1.0, ta)
        s0 = chi(kind, c, 1.0, ta + eps)
        f1 = phi(kind, c, 1.0, tb)
        d1 = Psi(kind, c, 1.0, tb)
        s1 = chi(kind, c, 1.0, tb - eps)
        A = f1 - (f0 + d0 * h + 0.5 * s0 * h * h)
        B = d1 - (d0 + s0 * h)
        C = s1 - s0
        tab[k, 0] = f0
        tab[k, 1] = d0
        tab[k, 2] = 0.5 * s0
        tab[k, 3] = (20.0 * A - 8.0 * B * h + C * h * h) / (2.0 * h ** 3)
        tab[k, 4] = (-30.0 * A + 14.0 * B * h - 2.0 * C * h * h) / (2.0 * h ** 4)
        tab[k, 5] = (12.0 * A - 6.0 * B * h + C * h * h) / (2.0 * h ** 5)
    meta = np.array([t0, h, 1.0 / h, float(kind), c])
    return tab, meta


@njit(cache=True)
def phi_tab(tab, meta, y, t):
    u = t if y > 0.5 else -t
    x = (u - meta[0]) * meta[2]
    if x < 0.0 or x >= tab.shape[0]:
        return phi(int(meta[3]), meta[4], y, t)
    k = int(x)
    r = u - (meta[0] + k * meta[1])
    return tab[k, 0] + r * (tab[k, 1] + r * (tab[k, 2] + r * (tab[k, 3] + r * (tab[k, 4] + r * tab[k, 5]))))


@njit(cache=True)
def phi_tab_derivs(tab, meta, y, t):
    """(d/dt, d2/dt2) of the tabulated phi(y, t)."""
    u = t if y > 0.5 else -t
    x = (u - meta[0]) * meta[2]
    if x < 0.0 or x >= tab.shape[0]:
        kind = int(meta[3])
        return Psi(kind, meta[4], y, t), chi(kind, meta[4], y, t)
    k = int(x)
    r = u - (meta[0] + k * meta[1])
    d1 = tab[k, 1] + r * (2.0 * tab[k, 2] + r * (3.0 * tab[k, 3] + r * (4.0 * tab[k, 4]
                                                                     + r * 5.0 * tab[k, 5])))
    d2 = 2.0 * tab[k, 2] + r * (6.0 * tab[k, 3] + r * (12.0 * tab[k, 4] + r * 20.0 * tab[k, 5]))
    if y > 0.5:
        return d1, d2
    return -d1, d2


# ---------------------------------------------------------------- penalties

@njit(cache=True)
def scad_scalar(lam, a, b):
    ab = abs(b)
    if ab <= lam:
        return lam * ab
    if ab <= a * lam:
        return (a * lam * ab - 0.5 * (ab * ab + lam * lam)) / (a - 1.0)
    return lam * lam * (a * a - 1.0) / (2.0 * (a - 1.0))


@njit(cache=True)
def mcp_scalar(lam, a, b):
    ab = abs(b)
    if ab <= a * lam:
        return lam * ab - ab * ab / (2.0 * a)
    return 0.5 * a * lam * lam


@njit(cache=True)
def separable_term(fam, lam, theta, a, q, b):
    """Per-coordinate contribution J(b) of a separable penalty."""
    if fam == P_NONE:
        return 0.0
    if fam == P_LASSO:
        return lam * abs(b)
    if fam == P_RIDGE:
        return 0.5 * lam * b * b
    if fam == P_ENET:
        return lam * (theta * abs(b) + 0.5 * (1.0 - theta) * b * b)
    if fam == P_BRIDGE:
        return lam * abs(b) ** q
    if fam == P_SCAD:
        return scad_scalar(lam, a, b)
    if fam == P_MCP:
        return mcp_scalar(lam, a, b)
    return 0.0


@njit(cache=True)
def penalty_total(fam, lam, lam_scale, theta, a, q, beta):
    p = beta.shape[0]
    if fam == P_SIGN:
        m = 0.0
        for k in range(p):
            if abs(beta[k]) > m:
                m = abs(beta[k])
        if m == 0.0:
            return 0.0
        # dividing by the largest entry keeps the squares from underflowing
        s1 = 0.0
        s2 = 0.0
        for k in range(p):
            u = beta[k] / m
            s1 += abs(u)
            s2 += u * u
        return lam * s1 / math.sqrt(s2)
    tot = 0.0
    for k in range(p):
        tot += separable_term(fam, lam * lam_scale[k], theta, a, q, beta[k])
    return tot


# ---------------------------------------------------------------- objective

@njit(cache=True)
def loss_mean(kind, c, y, w, t, inv_n):
    tot = 0.0
    for i in range(t.shape[0]):
        tot += w[i] * phi(kind, c, y[i], t[i])
    return tot * inv_n


@njit(cache=True)
def _line_pen(pmode, s, fam, lam, lam_scale, theta, a, q, beta, j, rest1, rest2):
    if pmode == LINE_NONE or fam == P_NONE:
        return 0.0
    if pmode == LINE_COORD:
        if fam == P_SIGN:
            s1 = rest1 + abs(s)
            if s1 == 0.0:
                return 0.0
            s2 = rest2 + s * s
            if s2 < 1e-280:
                b = beta.copy()
                b[j] = s
                return penalty_total(fam, lam, lam_scale, theta, a, q, b)
            return lam * s1 / math.sqrt(s2)
        return separable_term(fam, lam * lam_scale[j], theta, a, q, s)
    if fam == P_SIGN:
        # scale invariant
        return penalty_total(fam, lam, lam_scale, theta, a, q, beta)
    tot = 0.0
    for k in range(beta.shape[0]):
        tot += separable_term(fam, lam * lam_scale[k], theta, a, q, s * beta[k])
    return tot


@njit(cache=True)
def _line_eval(s, s_ref, t, d, y, w, inv_n, tab, meta,
               pmode, fam, lam, lam_scale, theta, a, q, beta, j, rest1, rest2):
    ds = s - s_ref
    tot = 0.0
    for i in range(t.shape[0]):
        tot += w[i] * phi_tab(tab, meta, y[i], t[i] + ds * d[i])
    val = tot * inv_n + _line_pen(pmode, s, fam, lam, lam_scale, theta, a, q, beta, j, rest1, rest2)
    if not math.isfinite(val):
        return math.inf
    return val


@njit(cache=True)
def _sep_derivs(fam, lam, theta, a, q, b):
    """(J'(b), J''(b)) of a separable term at b != 0."""
    sg = 1.0 if b > 0.0 else -1.0
    ab = abs(b)
    if fam == P_LASSO:
        return lam * sg, 0.0
    if fam == P_RIDGE:
        return lam * b, lam
    if fam == P_ENET:
        return lam * (theta * sg + (1.0 - theta) * b), lam * (1.0 - theta)
    if fam == P_BRIDGE:
        if q == 1.0:
            return lam * sg, 0.0
        return lam * q * ab ** (q - 1.0) * sg, lam * q * (q - 1.0) * ab ** (q - 2.0)
    if fam == P_SCAD:
        if ab <= lam:
            return lam * sg, 0.0
        if ab <= a * lam:
            return (a * lam - ab) / (a - 1.0) * sg, -1.0 / (a - 1.0)
        return 0.0, 0.0
    if fam == P_MCP:
        if ab <= a * lam:
            return (lam - ab / a) * sg, -1.0 / a
        return 0.0, 0.0
    return 0.0, 0.0


@njit(cache=True)
def _line_derivs(s, s_ref, t, d, y, w, inv_n, tab, meta,
                 pmode, fam, lam, lam_scale, theta, a, q, beta, j, rest1, rest2):
    """First and second derivative of the line objective at s."""
    ds = s - s_ref
    g = 0.0
    h = 0.0
    for i in range(t.shape[0]):
        g1, h1 = phi_tab_derivs(tab, meta, y[i], t[i] + ds * d[i])
        g += w[i] * g1 * d[i]
        h += w[i] * h1 * d[i] * d[i]
    g *= inv_n
    h *= inv_n
    if pmode == LINE_NONE or fam == P_NONE:
        return g, h
    if pmode == LINE_COORD:
        if fam == P_SIGN:
            sg = 1.0 if s > 0.0 else -1.0
            r1 = rest1 + abs(s)
            N = math.sqrt(rest2 + s * s)
            g += lam * (sg / N - r1 * s / N ** 3)
            h += lam * (-(rest1 + 3.0 * abs(s)) / N ** 3 + 3.0 * r1 * s * s / N ** 5)
            return g, h
        g1, h1 = _sep_derivs(fam, lam * lam_scale[j], theta, a, q, s)
        return g + g1, h + h1
    if fam == P_SIGN:
        return g, h
    for k in range(beta.shape[0]):
        if beta[k] != 0.0:
            g1, h1 = _sep_derivs(fam, lam * lam_scale[k], theta, a, q, s * beta[k])
            g += beta[k] * g1
            h += beta[k] * beta[k] * h1
    return g, h


@njit(cache=True)
def _polish(x, fx, step_cap, s_ref, t, d, y, w, inv_n, tab, meta,
            pmode, fam, lam, lam_scale, theta, a, q, beta, j, rest1, rest2):
    """Safeguarded Newton steps on the line derivative after the bracketed search.

    Comparing function values cannot locate a minimum more finely than about
    sqrt(machine epsilon); the derivative can. Steps are capped in length, never
    cross zero (a kink of every sparsity penalty) and must shrink |f'|.
    """
    g, h = _line_derivs(x, s_ref, t, d, y, w, inv_n, tab, meta,
                        pmode, fam, lam, lam_scale, theta, a, q, beta, j, rest1, rest2)
    for _ in range(3):
        if not (h > 0.0) or g == 0.0:
            break
        u = x - g / h
        if abs(u - x) > step_cap or u * x <= 0.0:
            break
        gu, hu = _line_derivs(u, s_ref, t, d, y, w, inv_n, tab, meta,
                              pmode, fam, lam, lam_scale, theta, a, q, beta, j, rest1, rest2)
        if not abs(gu) < abs(g):
            break
        x, g, h = u, gu, hu
        fx = _line_eval(x, s_ref, t, d, y, w, inv_n, tab, meta,
                        pmode, fam, lam, lam_scale, theta, a, q, beta, j, rest1, rest2)
    return x, fx


# below this relative tolerance Brent alone stalls on rounding noise
BRENT_XTOL_FLOOR = 1e-8


@njit(cache=True)
def line_minimize(s0, f0, h0, kmin, kmax, lo, hi, logscale, zero_candidate, xtol,
                  t, d, y, w, inv_n, tab, meta,
                  pmode, fam, lam, lam_scale, theta, a, q, beta, j, rest1, rest2):
    """Minimize s -> objective along a line.

    The bracket is found by expanding steps h0 * 2**k on both sides of s0
    (multiplicative when ``logscale``). At least ``kmin`` steps are taken in each
    direction; afterwards a direction is abandoned once the objective rises.
    Brent's golden-section/parabolic method then refines inside the bracket,
    and s = 0 is compared explicitly when ``zero_candidate`` is set.
    """
    npts = 2 * kmax + 1
    xs = np.empty(npts)
    fs = np.empty(npts)
    xs[0] = s0
    fs[0] = f0
    m = 1
    for sgn in (1.0, -1.0):
        prev = f0
        last = s0
        for k in range(kmax):
            step = h0 * 2.0 ** k
            if logscale:
                s = s0 * math.exp(sgn * step)
            else:
                s = s0 + sgn * step
            if s < lo:
                s = lo
            elif s > hi:
                s = hi
            if s == last:
                break
            fv = _line_eval(s, s0, t, d, y, w, inv_n, tab, meta,
                            pmode, fam, lam, lam_scale, theta, a, q, beta, j, rest1, rest2)
            xs[m] = s
            fs[m] = fv
            m += 1
            last = s
            if k + 1 >= kmin and fv > prev:
                break
            prev = fv

    order = np.argsort(xs[:m])
    xs_s = xs[:m][order]
    fs_s = fs[:m][order]
    ib = 0
    for k in range(1, m):
        if fs_s[k] < fs_s[ib]:
            ib = k
    xb = xs_s[ib]
    fb = fs_s[ib]
    left = xs_s[ib - 1] if ib > 0 else xb
    right = xs_s[ib + 1] if ib < m - 1 else xb
    scale = h0 / 0.05
    tol = xtol * scale

    if xb == 0.0 and zero_candidate:
        # 0 is a kink for every sparsity penalty; probe both one-sided slopes
        eps = 1e-7 * scale
        fp = _line_eval(eps, s0, t, d, y, w, inv_n, tab, meta,
                        pmode, fam, lam, lam_scale, theta, a, q, beta, j, rest1, rest2)
        fm = _line_eval(-eps, s0, t, d, y, w, inv_n, tab, meta,
                        pmode, fam, lam, lam_scale, theta, a, q, beta, j, rest1, rest2)
        if fp >= fb and fm >= fb:
            return 0.0, fb
        if fp < fm:
            left = 0.0
            xb, fb = eps, fp
        else:
            right = 0.0
            xb, fb = -eps, fm

    if right > left:
        xb, fb = _brent(left, right, xb, fb, tol, 200, s0, t, d, y, w, inv_n, tab, meta,
                        pmode, fam, lam, lam_scale, theta, a, q, beta, j, rest1, rest2)
        if xb != 0.0 and xtol < BRENT_XTOL_FLOOR:
            xb, fb = _polish(xb, fb, 100.0 * BRENT_XTOL_FLOOR * scale * (1.0 + abs(xb)), s0, t, d, y, w, inv_n,
                             tab, meta, pmode, fam, lam, lam_scale, theta, a, q, beta, j,
                             rest1, rest2)

    if zero_candidate and xb != 0.0 and lo <= 0.0 <= hi:
        fz = _line_eval(0.0, s0, t, d, y, w, inv_n, tab, meta,
                        pmode, fam, lam, lam_scale, theta, a, q, beta, j, rest1, rest2)
        if fz <= fb:
            return 0.0, fz
    return xb, fb


@njit(cache=True)
def _brent(a_, b_, x, fx, tol, maxit, s_ref, t, d, y, w, inv_n, tab, meta,
           pmode, fam, lam, lam_scale, theta, a, q, beta, j, rest1, rest2):
    cgold = 0.3819660112501051
    lo = a_
    hi = b_
    v = x
    wp = x
    fv = fx
    fw = fx
    e = 0.0
    dd = 0.0
    for _ in range(maxit):
        xm = 0.5 * (lo + hi)
        tol1 = tol * (1.0 + abs(x))
        tol2 = 2.0 * tol1
        if abs(x - xm) <= tol2 - 0.5 * (hi - lo):
            break
        golden = True
        if abs(e) > tol1:
            r = (x - wp) * (fx - fv)
            qq = (x - v) * (fx - fw)
            p = (x - v) * qq - (x - wp) * r
            qq = 2.0 * (qq - r)
            if qq > 0.0:
                p = -p
            qq = abs(qq)
            etemp = e
            e = dd
            if not (abs(p) >= abs(0.5 * qq * etemp) or p <= qq * (lo - x) or p >= qq * (hi - x)):
                dd = p / qq
                u = x + dd
                if u - lo < tol2 or hi - u < tol2:
                    dd = tol1 if xm >= x else -tol1
                golden = False
        if golden:
            e = (lo - x) if x >= xm else (hi - x)
            dd = cgold * e
        if abs(dd) >= tol1:
            u = x + dd
        else:
            u = x + (tol1 if dd >= 0.0 else -tol1)
        fu = _line_eval(u, s_ref, t, d, y, w, inv_n, tab, meta,
                        pmode, fam, lam, lam_scale, theta, a, q, beta, j, rest1, rest2)
        if fu <= fx:
            if u >= x:
                lo = x
            else:
                hi = x
            v, fv = wp, fw
            wp, fw = x, fx
            x, fx = u, fu
        else:
            if u < x:
                lo = u
            else:
                hi = u
            if fu <= fw or wp == x:
                v, fv = wp, fw
                wp, fw = u, fu
            elif fu <= fv or v == x or v == wp:
                v, fv = u, fu
    return x, fx


@njit(cache=True)
def coordinate_pass(perm, X, y, w, t, beta, inv_n, tab, meta,
                    fam, lam, lam_scale, theta, a, q, col_scale, kscan, xtol):
    """One cyclical pass; updates ``beta`` and the linear predictor ``t`` in place."""
    p = beta.shape[0]
    for jj in range(perm.shape[0]):
        j = perm[jj]
        bj = beta[j]
        rest1 = 0.0
        rest2 = 0.0
        if fam == P_SIGN:
            for k in range(p):
                if k != j:
                    rest1 += abs(beta[k])
                    rest2 += beta[k] * beta[k]
        xj = X[:, j]
        f0 = _line_eval(bj, bj, t, xj, y, w, inv_n, tab, meta,
                        LINE_COORD, fam, lam, lam_scale, theta, a, q, beta, j, rest1, rest2)
        base = col_scale[j]
        if abs(bj) > base:
            base = abs(bj)
        # the Sign penalty jumps from 0 to lam when the first coordinate leaves
        # the origin, so a local search there cannot see past the jump
        kmin = kscan if (fam == P_SIGN and bj == 0.0 and rest1 == 0.0) else 0
        bnew, _ = line_minimize(bj, f0, 0.05 * base, kmin, 60, -math.inf, math.inf, False,
                                fam != P_NONE, xtol, t, xj, y, w, inv_n, tab, meta,
                                LINE_COORD, fam, lam, lam_scale, theta, a, q, beta, j,
                                rest1, rest2)
        if bnew != bj:
            delta = bnew - bj
            for i in range(t.shape[0]):
                t[i] += delta * xj[i]
            beta[j] = bnew


@njit(cache=True)
def intercept_step(gamma, t, y, w, inv_n, tab, meta, xtol):
    ones = np.ones(t.shape[0])
    dummy = np.zeros(1)
    f0 = _line_eval(gamma, gamma, t, ones, y, w, inv_n, tab, meta,
                    LINE_NONE, P_NONE, 0.0, dummy, 0.0, 0.0, 1.0, dummy, 0, 0.0, 0.0)
    base = abs(gamma) if abs(gamma) > 1.0 else 1.0
    gnew, _ = line_minimize(gamma, f0, 0.05 * base, 0, 60, -math.inf, math.inf, False, False,
                            xtol, t, ones, y, w, inv_n, tab, meta,
                            LINE_NONE, P_NONE, 0.0, dummy, 0.0, 0.0, 1.0, dummy, 0, 0.0, 0.0)
    if gnew != gamma:
        delta = gnew - gamma
        for i in range(t.shape[0]):
            t[i] += delta
    return gnew


@njit(cache=True)
def scaling_step(gamma, z, t, y, w, beta, inv_n, tab, meta,
                 fam, lam, lam_scale, theta, a, q, xtol):
    """Return the minimizer over c in [1e-3, 1e3] of the objective at (gamma, c*beta).

    ``z`` holds X @ beta for the compacted rows and ``t = gamma + z``.
    """
    f0 = _line_eval(1.0, 1.0, t, z, y, w, inv_n, tab, meta,
                    LINE_SCALE, fam, lam, lam_scale, theta, a, q, beta, 0, 0.0, 0.0)
    cnew, _ = line_minimize(1.0, f0, 0.01, 0, 60, 1e-3, 1e3, True, False, xtol,
                            t, z, y, w, inv_n, tab, meta,
                            LINE_SCALE, fam, lam, lam_scale, theta, a, q, beta, 0, 0.0, 0.0)
    return cnew


@njit(cache=True)
def phi_array(kind, c, y, t):
    out = np.empty(t.shape[0])
    for i in range(t.shape[0]):
        out[i] = phi(kind, c, y[i], t[i])
    return out
