"""Pure-Python hot kernels.

Line-for-line twin of ``_kernels.pyx``; used when the extension is absent or
``PACKLP_PURE_PYTHON=1``.
"""
import math

import numpy as np

EPS = 2.220446049250313e-16
MAX_TERMS = 400


def hyp2f1_series(a, b, c, z):
    """Defining series at ``z``; returns (value, derivative, sum of |terms|)."""
    term = 1.0 + 0.0j
    total = 1.0 + 0.0j
    dtotal = 0.0 + 0.0j
    mag = 1.0
    k = 0
    while k < MAX_TERMS:
        term = term * (a + k) * (b + k) / ((c + k) * (k + 1.0)) * z
        total += term
        mag += abs(term)
        if z != 0.0:
            dtotal += (k + 1.0) * term / z
        k += 1
        if abs(term) <= EPS * 0.25 * mag:
            break
    return total, dtotal, mag


def _taylor_step(a, b, c, z0, y0, dy0, h):
    """Advance (y, y') of the hypergeometric ODE from z0 to z0 + h.

    Coefficients are carried pre-scaled by h^j.  Returns the new value, the
    new derivative, and the magnitudes sum |d_j| and sum j|d_j| used by the
    error estimate.
    """
    p0 = z0 * (1.0 - z0)
    p1 = 1.0 - 2.0 * z0
    q0 = c - (a + b + 1.0) * z0
    q1 = -(a + b + 1.0)
    rr = -a * b
    d0 = y0
    d1 = dy0 * h
    y = d0 + d1
    yd = d1
    mag = abs(d0) + abs(d1)
    magd = abs(d1)
    j = 0
    while j < MAX_TERMS:
        d2 = -((p1 * j + q0) * (j + 1.0) * d1 * h
               + (-j * (j - 1.0) + q1 * j + rr) * d0 * h * h) / (p0 * (j + 2.0) * (j + 1.0))
        y += d2
        yd += (j + 2.0) * d2
        mag += abs(d2)
        magd += (j + 2.0) * abs(d2)
        if abs(d2) + abs(d1) <= EPS * 0.25 * mag:
            break
        d0 = d1
        d1 = d2
        j += 1
    return y, yd / h, mag, magd


def hyp2f1_negative(a, b, c, zs, r0, alpha):
    """2F1(a, b; c; z) for an array of z <= 0.

    Points with |z| <= r0 use the defining series; the rest are reached by
    marching the ODE along the negative axis with relative steps alpha.
    Returns (values, absolute error estimates).
    """
    zs = np.asarray(zs, dtype=float)
    m = zs.shape[0]
    vals = np.zeros(m, dtype=complex)
    errs = np.zeros(m, dtype=float)
    order = np.argsort(-zs, kind="stable")
    started = False
    zk = 0.0
    y = 0.0j
    dy = 0.0j
    acc = 0.0
    for idx in range(m):
        i = order[idx]
        zt = zs[i]
        if -zt <= r0:
            v, dv, mag = hyp2f1_series(a, b, c, zt)
            vals[i] = v
            errs[i] = 4.0 * EPS * mag
            continue
        if not started:
            zk = -r0
            y, dy, mag = hyp2f1_series(a, b, c, zk)
            acc = 4.0 * EPS * mag / (abs(y) + abs(dy * zk) + 1e-300)
            started = True
        while zk - alpha * abs(zk) > zt:
            h = -alpha * abs(zk)
            y, dy, mag, magd = _taylor_step(a, b, c, zk, y, dy, h)
            zk = zk + h
            acc += 4.0 * EPS * (mag + magd) / (abs(y) + abs(dy * h) + 1e-300)
        h = zt - zk
        if h != 0.0:
            y, dy, mag, magd = _taylor_step(a, b, c, zk, y, dy, h)
            acc += 4.0 * EPS * (mag + magd) / (abs(y) + abs(dy * h) + 1e-300)
            zk = zt
        vals[i] = y
        errs[i] = acc * (abs(y) + abs(dy * zk * alpha))
    return vals, errs


def gegenbauer_table(L, lam, x):
    """Gegenbauer polynomials C_l^(lam) normalized to 1 at x=1, l = 0..L."""
    x = np.asarray(x, dtype=float)
    m = x.shape[0]
    out = np.empty((L + 1, m), dtype=float)
    for i in range(m):
        xi = x[i]
        pm = 1.0
        out[0, i] = 1.0
        if L >= 1:
            p = xi
            out[1, i] = p
            for l in range(1, L):
                pn = (2.0 * (l + lam) * xi * p - l * pm) / (l + 2.0 * lam)
                pm = p
                p = pn
                out[l + 1, i] = p
    return out


def laguerre_table(M, alpha, x):
    """Generalized Laguerre L_k^(alpha) normalized to 1 at 0, k = 0..M."""
    x = np.asarray(x, dtype=float)
    m = x.shape[0]
    out = np.empty((M + 1, m), dtype=float)
    for i in range(m):
        xi = x[i]
        pm = 1.0
        out[0, i] = 1.0
        if M >= 1:
            p = 1.0 - xi / (1.0 + alpha)
            out[1, i] = p
            for k in range(1, M):
                pn = ((2.0 * k + 1.0 + alpha - xi) * p - k * pm) / (k + 1.0 + alpha)
                pm = p
                p = pn
                out[k + 1, i] = p
    return out


def enumerate_lattice(R, bound):
    """Integer vectors x with |R x|^2 <= bound, R upper triangular (Fincke-Pohst).

    Returns an (count, n) int64 array including the zero vector.
    """
    R = np.asarray(R, dtype=float)
    n = R.shape[0]
    diag = np.diag(R).copy()
    mu = R / diag[:, None]
    q = diag * diag
    slack = bound * (1.0 + 1e-12) + 1e-300
    x = np.zeros(n, dtype=np.int64)
    found = []

    def level(i, remaining):
        center = 0.0
        for j in range(i + 1, n):
            center -= mu[i, j] * x[j]
        width = math.sqrt(max(remaining, 0.0) / q[i])
        lo = math.ceil(center - width)
        hi = math.floor(center + width)
        for v in range(lo, hi + 1):
            dv = v - center
            used = q[i] * dv * dv
            if used > remaining:
                continue
            x[i] = v
            if i == 0:
                found.append(x.copy())
            else:
                level(i - 1, remaining - used)
        x[i] = 0

    level(n - 1, slack)
    if not found:
        return np.zeros((0, n), dtype=np.int64)
    return np.array(found, dtype=np.int64)
