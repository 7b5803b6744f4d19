"""Vectorized adaptive Gauss-Kronrod quadrature (G7/K15) in one and two dimensions."""
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from packlp.errors import IntegrationFailure

_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

NODES = np.concatenate([-_XGK[:-1], [0.0], _XGK[-2::-1]])
W_KRONROD = np.concatenate([_WGK[:-1], [_WGK[-1]], _WGK[-2::-1]])
W_GAUSS = np.zeros(15)
W_GAUSS[1::2] = np.concatenate([_WG[:-1], [_WG[-1]], _WG[-2::-1]])

_EPS = np.finfo(float).eps


@dataclass
class QuadResult:
    """Integral value (scalar or vector), error estimate, and evaluation count."""

    value: object
    error: object
    evaluations: int


@lru_cache(maxsize=32)
def gauss_legendre(n):
    """Cached Gauss-Legendre nodes and weights on [-1, 1]."""
    x, w = np.polynomial.legendre.leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def _panel_rules(func, lo, hi):
    mid = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    x = mid[:, None] + half[:, None] * NODES[None, :]
    fx = np.asarray(func(x.ravel()), dtype=float)
    fx = fx.reshape(x.shape + fx.shape[1:])
    extra = (slice(None),) + (None,) * (fx.ndim - 2)
    hk = half[extra]
    kron = hk * np.einsum("pn...,n->p...", fx, W_KRONROD)
    gauss = hk * np.einsum("pn...,n->p...", fx, W_GAUSS)
    absint = np.abs(hk) * np.einsum("pn...,n->p...", np.abs(fx), W_KRONROD)
    return kron, np.abs(kron - gauss), absint


def integrate(func, a, b, *, rtol=1e-10, atol=0.0, points=(), limit=4000, initial=1):
    """Adaptive G7/K15 quadrature of a vectorized integrand on [a, b].

    Parameters
    ----------
    func : callable
        Maps a 1-D array of abscissae to an array of shape ``(len(x),)`` or
        ``(len(x), m)`` for vector-valued integrands.
    a, b : float
        Finite limits.
    rtol, atol : float
        Componentwise stopping rule ``err <= max(atol, rtol*|I|)``; a roundoff
        floor proportional to the integral of ``|f|`` is always added.
    points : sequence of float
        Interior breakpoints (kinks, singularities) that become panel edges.
    limit : int
        Maximum number of panels before :class:`IntegrationFailure`.
    initial : int
        Number of equal panels each breakpoint interval starts with.
    """
    a = float(a)
    b = float(b)
    if a == b:
        probe = np.asarray(func(np.array([a])), dtype=float)
        zero = np.zeros(probe.shape[1:]) if probe.ndim > 1 else 0.0
        return QuadResult(zero, zero, 1)
    sign = 1.0
    if b < a:
        a, b = b, a
        sign = -1.0
    edges = [a] + sorted(p for p in set(float(p) for p in points) if a < p < b) + [b]
    lo = []
    hi = []
    for e0, e1 in zip(edges[:-1], edges[1:]):
        cuts = np.linspace(e0, e1, initial + 1)
        lo.extend(cuts[:-1])
        hi.extend(cuts[1:])
    lo = np.array(lo)
    hi = np.array(hi)
    kron, err, absint = _panel_rules(func, lo, hi)
    evals = 15 * lo.size
    while True:
        total = kron.sum(axis=0)
        total_err = err.sum(axis=0)
        floor = 50.0 * _EPS * absint.sum(axis=0)
        tol = np.maximum(np.maximum(atol, rtol * np.abs(total)), floor)
        if np.all(total_err <= tol):
            return QuadResult(sign * total, total_err, evals)
        if lo.size >= limit:
            raise IntegrationFailure(
                f"adaptive quadrature did not converge on [{a}, {b}] within {limit} panels",
                value=sign * total, error=total_err)
        # score panels by their share of the worst component's budget
        score = err / np.where(tol > 0, tol, 1.0)
        if score.ndim > 1:
            score = score.max(axis=1)
        order = np.argsort(-score, kind="stable")
        cum = np.cumsum(score[order])
        target = score.sum() - 0.5
        nsplit = int(np.searchsorted(cum, target) + 1)
        nsplit = max(1, min(nsplit, order.size, limit - lo.size))
        chosen = order[:nsplit]
        keep = np.ones(lo.size, dtype=bool)
        keep[chosen] = False
        mids = 0.5 * (lo[chosen] + hi[chosen])
        new_lo = np.concatenate([lo[chosen], mids])
        new_hi = np.concatenate([mids, hi[chosen]])
        k2, e2, a2 = _panel_rules(func, new_lo, new_hi)
        evals += 15 * new_lo.size
        lo = np.concatenate([lo[keep], new_lo])
        hi = np.concatenate([hi[keep], new_hi])
        kron = np.concatenate([kron[keep], k2])
        err = np.concatenate([err[keep], e2])
        absint = np.concatenate([absint[keep], a2])


def _rect_rules(func, x0, x1, y0, y1):
    mx, hx = 0.5 * (x0 + x1), 0.5 * (x1 - x0)
    my, hy = 0.5 * (y0 + y1), 0.5 * (y1 - y0)
    X = mx[:, None, None] + hx[:, None, None] * NODES[None, :, None]
    Y = my[:, None, None] + hy[:, None, None] * NODES[None, None, :]
    X, Y = np.broadcast_arrays(X, Y)
    fx = np.asarray(func(X.ravel(), Y.ravel()), dtype=float).reshape(X.shape)
    jac = hx * hy
    kk = jac * np.einsum("pij,i,j->p", fx, W_KRONROD, W_KRONROD)
    gk = jac * np.einsum("pij,i,j->p", fx, W_GAUSS, W_KRONROD)
    kg = jac * np.einsum("pij,i,j->p", fx, W_KRONROD, W_GAUSS)
    ab = np.abs(jac) * np.einsum("pij,i,j->p", np.abs(fx), W_KRONROD, W_KRONROD)
    return kk, np.abs(kk - gk), np.abs(kk - kg), ab


def integrate_2d(func, xlim, ylim, *, rtol=1e-9, atol=0.0, limit=6000, initial=(2, 2)):
    """Adaptive tensor-product K15 quadrature on a rectangle.

    ``func(x, y)`` receives flat arrays of equal length.  Rectangles are
    bisected along the axis whose Gauss/Kronrod discrepancy is larger.
    """
    xs = np.linspace(xlim[0], xlim[1], initial[0] + 1)
    ys = np.linspace(ylim[0], ylim[1], initial[1] + 1)
    gx0, gy0 = np.meshgrid(xs[:-1], ys[:-1], indexing="ij")
    gx1, gy1 = np.meshgrid(xs[1:], ys[1:], indexing="ij")
    x0, x1, y0, y1 = gx0.ravel(), gx1.ravel(), gy0.ravel(), gy1.ravel()
    kk, ex, ey, ab = _rect_rules(func, x0, x1, y0, y1)
    evals = 225 * x0.size
    while True:
        total = kk.sum()
        err = ex + ey
        total_err = err.sum()
        tol = max(atol, rtol * abs(total), 50.0 * _EPS * ab.sum())
        if total_err <= tol:
            return QuadResult(total, total_err, evals)
        if x0.size >= limit:
            raise IntegrationFailure("2-D adaptive quadrature did not converge",
                                     value=total, error=total_err)
        order = np.argsort(-err, kind="stable")
        cum = np.cumsum(err[order])
        nsplit = int(np.searchsorted(cum, total_err - 0.5 * tol) + 1)
        nsplit = max(1, min(nsplit, order.size, limit - x0.size))
        c = order[:nsplit]
        keep = np.ones(x0.size, dtype=bool)
        keep[c] = False
        alongx = ex[c] >= ey[c]
        xm = 0.5 * (x0[c] + x1[c])
        ym = 0.5 * (y0[c] + y1[c])
        nx0 = np.concatenate([x0[c], np.where(alongx, xm, x0[c])])
        nx1 = np.concatenate([np.where(alongx, xm, x1[c]), x1[c]])
        ny0 = np.concatenate([y0[c], np.where(alongx, y0[c], ym)])
        ny1 = np.concatenate([np.where(alongx, y1[c], ym), y1[c]])
        k2, ex2, ey2, ab2 = _rect_rules(func, nx0, nx1, ny0, ny1)
        evals += 225 * nx0.size
        x0 = np.concatenate([x0[keep], nx0])
        x1 = np.concatenate([x1[keep], nx1])
        y0 = np.concatenate([y0[keep], ny0])
        y1 = np.concatenate([y1[keep], ny1])
        kk = np.concatenate([kk[keep], k2])
        ex = np.concatenate([ex[keep], ex2])
        ey = np.concatenate([ey[keep], ey2])
        ab = np.concatenate([ab[keep], ab2])
