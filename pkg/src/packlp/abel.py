"""Abel transform on real hyperbolic space and its inverses.

Everything is computed in the variable x = cosh r, where the operator
-(1/sinh r) d/dr becomes -d/dx:

    Af(r)        = c_n ∫_0^∞ 2 u^(n-2) F(cosh r + u²) du,   F(x) = f(arccosh x)
    A⁻¹g (n odd) = (2π)^(-(n-1)/2) (-d/dx)^((n-1)/2) G(cosh r)
    A⁻¹g (n even)= 2 / (2^((n-1)/2) π^(n/2)) ∫_0^∞ (-d/dx)^(n/2) G(cosh r + u²) du

with c_n = (2π)^((n-1)/2)/Γ((n-1)/2) and G(x) = g(arccosh x).  The
substitution x - cosh r = u² removes the endpoint singularity for n = 2.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import special

from packlp import specfun
from packlp.errors import CertificationFailure, DifferentiationInstability, DomainError
from packlp.geometry import Envelope, Euclidean, Hyperbolic, RadialFunction, ball_volume
from packlp.quadrature import integrate

log = logging.getLogger(__name__)


def forward_constant(n):
    return (2 * math.pi) ** (0.5 * (n - 1)) / math.gamma(0.5 * (n - 1))


def odd_inverse_constant(n):
    return (2 * math.pi) ** (-0.5 * (n - 1))


def even_inverse_constant(n):
    return 1.0 / (2 ** (0.5 * (n - 1)) * math.pi ** (0.5 * n))


@dataclass
class EvenLineFunction:
    """An even function on the real line.

    ``evaluator`` receives |t|.  ``envelope`` bounds |g(t)| by
    A·exp(-κt²) beyond its radius.  Basis-backed instances (``basis`` set)
    differentiate analytically in x = cosh t.
    """

    evaluator: Callable
    envelope: Envelope
    basis: object = None
    coefficients: np.ndarray = field(default_factory=lambda: np.zeros(0))
    label: str = ""

    def __call__(self, t):
        return self.evaluator(np.abs(np.asarray(t, dtype=float)))

    def samples(self, ts):
        return np.asarray(self(ts), dtype=float)

    def truncation(self, tol=1e-17):
        """Radius beyond which the envelope is below tol·A."""
        env = self.envelope
        if env.compact:
            return env.radius
        return max(env.radius, math.sqrt(-math.log(tol) / env.decay))

    def x_derivative(self, x, order):
        """(d/dx)^order of G(x) = g(arccosh x) at points x >= 1."""
        x = np.asarray(x, dtype=float)
        if self.basis is not None and hasattr(self.basis, "x_derivative"):
            return self.basis.x_derivative(self.coefficients, x, order)
        atol = 0.0 if self.envelope.compact else 1e-14 * self.envelope.amplitude
        return chebyshev_x_derivative(lambda y: self.evaluator(np.arccosh(np.maximum(y, 1.0))),
                                      x, order, atol=atol)


def _arccosh_sq_at_one(terms):
    a = np.zeros(terms + 1)
    a[1] = 2.0
    for k in range(1, terms):
        a[k + 1] = -k * k * a[k] / ((2 * k + 1) * (k + 1))
    return a


_AT_ONE = _arccosh_sq_at_one(120)
_BINOM = special.comb(np.arange(121)[:, None], np.arange(121)[None, :])


def arccosh_sq_series(x0, order):
    """Taylor coefficients of v(x) = arccosh(x)² about each x0 (shape (len, order+1))."""
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    out = np.zeros((x0.size, order + 1))
    near = x0 - 1.0 <= 0.5
    if np.any(near):
        w0 = x0[near] - 1.0
        K = _AT_ONE.size
        powers = w0[:, None] ** np.arange(K)[None, :]
        for j in range(order + 1):
            ks = np.arange(j, K)
            out[near, j] = (_AT_ONE[ks][None, :] * _BINOM[ks, j][None, :] * powers[:, ks - j]).sum(axis=1)
    far = ~near
    if np.any(far):
        xf = x0[far]
        ac = np.arccosh(xf)
        den = xf * xf - 1.0
        a = np.zeros((xf.size, order + 2))
        a[:, 0] = ac * ac
        a[:, 1] = 2.0 * ac / np.sqrt(den)
        for k in range(order):
            rhs = (2.0 if k == 0 else 0.0) - (k + 1) * (2 * k + 1) * xf * a[:, k + 1] - k * k * a[:, k]
            a[:, k + 2] = rhs / (den * (k + 2) * (k + 1))
        out[far] = a[:, :order + 1]
    return out


def _series_mul(p, q, order):
    out = np.zeros(p.shape[:-1] + (order + 1,))
    for i in range(order + 1):
        out[..., i] = (p[..., :i + 1] * q[..., i::-1]).sum(axis=-1)
    return out


def _series_exp(s, order):
    # exp of a series with zero constant term: e' = s' e
    e = np.zeros(s.shape[:-1] + (order + 1,))
    e[..., 0] = 1.0
    for k in range(1, order + 1):
        j = np.arange(1, k + 1)
        e[..., k] = (j * s[..., j] * e[..., k - j]).sum(axis=-1) / k
    return e


def gauss_poly_x_derivative(poly_derivs, beta, x, order):
    """Derivatives in x of Σ_i p_i (v - v0)^i · exp(-β v) with v = arccosh(x)².

    ``poly_derivs(v0, i)`` returns d^i/dv^i P at v0 divided by i!, shape
    (len(v0), i_max+1, m) for m stacked polynomials.  Returns an array
    (m, len(x)) of (d/dx)^order of each G_k at x.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    vs = arccosh_sq_series(x, order)
    v0 = vs[:, 0]
    delta = vs.copy()
    delta[:, 0] = 0.0
    p = poly_derivs(v0, order)  # (len, order+1, m)
    powers = np.zeros((x.size, order + 1, order + 1))
    cur = np.zeros((x.size, order + 1))
    cur[:, 0] = 1.0
    for i in range(order + 1):
        powers[:, i, :] = cur
        cur = _series_mul(cur, delta, order)
    # polynomial part as series in y: Σ_i p_i δ^i
    poly_series = np.einsum("xim,xij->xmj", p, powers)
    ex = _series_exp(-beta * delta, order)
    total = _series_mul(poly_series, ex[:, None, :], order)
    scale = np.exp(-beta * v0)
    return (math.factorial(order) * total[:, :, order] * scale[:, None]).T


def _cheb_diff_row(N, order):
    # Chebyshev points x_j = cos(jπ/(N-1)) and the row of D^order at x = -1
    j = np.arange(N)
    xs = np.cos(np.pi * j / (N - 1))
    c = np.ones(N)
    c[0] = c[-1] = 2.0
    c = c * (-1.0) ** j
    X = xs[:, None] - xs[None, :]
    D = np.outer(c, 1.0 / c) / (X + np.eye(N))
    D = D - np.diag(D.sum(axis=1))
    Dk = np.linalg.matrix_power(D, order)
    return xs, Dk[-1]


_CHEB_CACHE = {}


def chebyshev_x_derivative(G, x, order, npts=14, tol=1e-8, max_halvings=6, atol=0.0):
    """One-sided spectral derivative of G at x using [x, x + H].

    The step H is halved pointwise until two successive estimates agree to
    ``tol`` relative to the sampled magnitude of G, or to ``atol``.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if order == 0:
        return np.asarray(G(x), dtype=float)
    key = (npts, order)
    if key not in _CHEB_CACHE:
        _CHEB_CACHE[key] = _cheb_diff_row(npts, order)
    nodes, row = _CHEB_CACHE[key]

    def estimate(xs, H):
        pts = xs[:, None] + 0.5 * H[:, None] * (nodes[None, :] + 1.0)
        vals = np.asarray(G(pts.ravel()), dtype=float).reshape(pts.shape)
        return vals @ row * (2.0 / H) ** order, np.abs(vals).max(axis=1)

    out = np.empty(x.size)
    todo = np.arange(x.size)
    H = np.ones(x.size)
    prev, mag = estimate(x, H)
    for _ in range(max_halvings):
        H = 0.5 * H
        cur, mag2 = estimate(x[todo], H)
        ok = np.abs(cur - prev) <= tol * (np.maximum(mag, mag2) + np.abs(cur)) + atol + 1e-300
        out[todo[ok]] = cur[ok]
        todo, H, prev, mag = todo[~ok], H[~ok], cur[~ok], mag2[~ok]
        if todo.size == 0:
            return out
    raise DifferentiationInstability(f"order-{order} derivative did not stabilize")


def fit_envelope(geom, func, decay, radius, stop, count=400, safety=4.0):
    """Envelope A·E(t)·exp(-decay·t²) dominating ``func`` on [radius, stop].

    The amplitude is the sampled supremum of |f|/(E·exp(-decay·t²)) times
    ``safety``; validation at independent points happens in the caller.
    """
    ts = np.linspace(radius, stop, count)
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        base = Envelope(1.0, decay, radius).bound(geom, ts)
        ratio = np.abs(np.asarray(func(ts), dtype=float)) / base
    ratio = ratio[np.isfinite(ratio)]
    amp = float(ratio.max()) * safety if ratio.size else 0.0
    return Envelope(max(amp, 1e-300), decay, radius)


def _radial_truncation(f, tol=1e-18):
    env = f.envelope
    if env.compact:
        return env.radius
    # ∫_T^∞ A e^{-κs²} ds <= tol·A
    T = max(env.radius, 1.0)
    while special.erfc(math.sqrt(env.decay) * T) * math.sqrt(math.pi / env.decay) / 2 > tol:
        T *= 1.2
    return T


def abel_forward_values(f, r, rtol=1e-12, chunk=128):
    """Af at an array of r via vector-valued adaptive quadrature in u."""
    geom = f.geometry
    if geom.kind != "hyperbolic":
        raise DomainError("the Abel transform is defined on hyperbolic space")
    r = np.asarray(r, dtype=float)
    flat = np.abs(r.ravel())
    out = np.concatenate([_forward_chunk(f, flat[i:i + chunk], rtol)
                          for i in range(0, flat.size, chunk)]) if flat.size else flat
    return out.reshape(r.shape)


def _forward_chunk(f, r, rtol):
    n = f.geometry.n
    T = _radial_truncation(f)
    out = np.zeros(r.size)
    live = r < T
    if not np.any(live):
        return out
    xr = np.cosh(r[live])
    U = math.sqrt(max(math.cosh(T) - xr.min(), 0.0))

    def integrand(u):
        x = xr[None, :] + (u * u)[:, None]
        s = np.arccosh(x)
        vals = np.asarray(f(s.ravel()), dtype=float).reshape(s.shape)
        vals = np.where(s <= T, vals, 0.0)
        return 2.0 * u[:, None] ** (n - 2) * vals

    scale = abs(float(np.asarray(f(np.zeros(1)))[0]))
    if not f.envelope.compact:
        scale = max(scale, f.envelope.amplitude)
    res = integrate(integrand, 0.0, U, rtol=rtol, atol=1e-15 * scale, initial=16,
                    points=_u_breaks(f, xr.min(), U))
    out[live] = forward_constant(n) * np.asarray(res.value)
    return out


def _u_breaks(f, x0, U):
    pts = []
    for b in f.breakpoints:
        u = math.sqrt(max(math.cosh(b) - x0, 0.0))
        if 0 < u < U:
            pts.append(u)
    return pts


def abel_forward(f):
    """Abel transform Af of a radial function on hyperbolic space, as an even line function."""
    geom = f.geometry
    if geom.kind != "hyperbolic":
        raise DomainError("the Abel transform is defined on hyperbolic space")
    env = f.envelope
    ev = lambda t: abel_forward_values(f, t)
    if env.compact:
        out_env = Envelope(0.0, 1.0, env.radius)
    else:
        # |Af| <= c_n A ∫_r^∞ e^{-κs²} ds <= c_n A √π/(2√κ) e^{-κr²}
        amp = forward_constant(geom.n) * env.amplitude * math.sqrt(math.pi / env.decay) / 2
        out_env = Envelope(amp, env.decay, env.radius)
    return EvenLineFunction(ev, out_env, label=f"A[{f.label}]")


def _line_truncation(g, tol=1e-18):
    return g.truncation(tol)


def abel_inverse_odd(g, n, envelope_decay=None, interpolate=None):
    """A⁻¹g on hyperbolic space of odd dimension n >= 3.

    Without an analytic basis the numerical derivatives are tabulated once on
    a piecewise Chebyshev grid (``interpolate`` defaults to that case).
    """
    if n < 3 or n % 2 == 0:
        raise DomainError("odd inverse needs odd n >= 3")
    q = (n - 1) // 2
    const = odd_inverse_constant(n) * (-1) ** q

    def ev(r):
        r = np.asarray(r, dtype=float)
        return const * g.x_derivative(np.cosh(r).ravel(), q).reshape(r.shape)

    if interpolate is None:
        interpolate = g.basis is None
    return _inverse_function(Hyperbolic(n), g, ev, envelope_decay, interpolate)


def _inverse_function(geom, g, ev, envelope_decay, interpolate):
    breaks = ()
    if g.envelope.compact and g.envelope.radius == 0.0:
        ev = lambda r: np.zeros(np.shape(r))
        interpolate = False
    if interpolate:
        ev = PanelInterpolant(ev, _line_truncation(g))
        breaks = tuple(ev.edges[1:-1])
    return RadialFunction(geom, ev, _inverse_envelope(geom, g, ev, envelope_decay),
                          breakpoints=breaks, label=f"Ainv[{g.label}]")


class PanelInterpolant:
    """Piecewise Chebyshev interpolant of a function on [0, T], zero beyond T."""

    def __init__(self, func, T, panels=48, order=16, chunk=128):
        self.T = float(T)
        self.edges = np.linspace(0.0, self.T, panels + 1)
        j = np.arange(order)
        self.ref = np.cos(np.pi * (2 * j + 1) / (2 * order))
        mid = 0.5 * (self.edges[:-1] + self.edges[1:])
        half = 0.5 * np.diff(self.edges)
        nodes = (mid[:, None] + half[:, None] * self.ref[None, :]).ravel()
        vals = np.concatenate([np.asarray(func(nodes[i:i + chunk]), dtype=float)
                               for i in range(0, nodes.size, chunk)])
        self.values = vals.reshape(panels, order)
        self.bary = (-1.0) ** j * np.sin(np.pi * (2 * j + 1) / (2 * order))

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        flat = np.abs(t.ravel())
        out = np.zeros(flat.size)
        live = flat <= self.T
        tl = flat[live]
        k = np.clip(np.searchsorted(self.edges, tl, side="right") - 1, 0, self.values.shape[0] - 1)
        lo, hi = self.edges[k], self.edges[k + 1]
        y = (2.0 * tl - lo - hi) / (hi - lo)
        diff = y[:, None] - self.ref[None, :]
        exact = np.isclose(diff, 0.0, atol=1e-15)
        diff[exact] = 1.0
        w = self.bary[None, :] / diff
        res = (w * self.values[k]).sum(axis=1) / w.sum(axis=1)
        hit = exact.any(axis=1)
        if np.any(hit):
            res[hit] = self.values[k[hit]][exact[hit]]
        out[live] = res
        return out.reshape(t.shape)


def abel_inverse_even_values(g, n, r, rtol=1e-11, chunk=128, atol=None):
    """A⁻¹g at an array of r (n even) by direct quadrature in u."""
    q = n // 2
    const = 2.0 * even_inverse_constant(n) * (-1) ** q
    T = _line_truncation(g)
    if atol is None:
        atol = 1e-14 * g.envelope.amplitude
    if g.basis is None:
        # numerical derivatives carry ~1e-8 relative noise
        rtol = max(rtol, 1e-8)
        atol = max(atol, 1e-11 * g.envelope.amplitude)
    r = np.asarray(r, dtype=float)
    flat = np.abs(r.ravel())
    out = np.zeros(flat.size)
    for start in range(0, flat.size, chunk):
        idx = np.arange(start, min(start + chunk, flat.size))
        live = idx[flat[idx] < T]
        if live.size == 0:
            continue
        xr = np.cosh(flat[live])
        U = math.sqrt(max(math.cosh(T) - xr.min(), 0.0))

        def integrand(u):
            x = xr[None, :] + (u * u)[:, None]
            d = g.x_derivative(x.ravel(), q).reshape(x.shape)
            return np.where(x <= math.cosh(T), d, 0.0)

        res = integrate(integrand, 0.0, U, rtol=rtol, atol=atol, initial=16)
        out[live] = const * np.asarray(res.value)
    return out.reshape(r.shape)


def abel_inverse_even(g, n, envelope_decay=None, rtol=1e-11, interpolate=True):
    """A⁻¹g on hyperbolic space of even dimension n >= 2.

    By default the result is tabulated once on a piecewise Chebyshev grid
    over the truncation interval of g; ``interpolate=False`` evaluates the
    defining integral at every call.
    """
    if n < 2 or n % 2:
        raise DomainError("even inverse needs even n >= 2")
    direct = lambda r: abel_inverse_even_values(g, n, r, rtol)
    return _inverse_function(Hyperbolic(n), g, direct, envelope_decay, interpolate)


def _inverse_envelope(geom, g, ev, decay):
    genv = g.envelope
    if genv.compact:
        return Envelope(0.0, 1.0, genv.radius)
    kappa = decay if decay is not None else 0.8 * genv.decay
    stop = _line_truncation(g, 1e-30)
    return fit_envelope(geom, ev, kappa, max(genv.radius, 0.0), stop)


def cosine_transform(g, lams, rtol=1e-11):
    """2 ∫_0^∞ g(t) cos(λt) dt for an array of λ."""
    lams = np.atleast_1d(np.asarray(lams, dtype=float))
    T = g.truncation(1e-18)
    res = integrate(lambda t: 2.0 * np.asarray(g(t), dtype=float)[:, None] * np.cos(t[:, None] * lams[None, :]),
                    0.0, T, rtol=rtol, atol=1e-300, initial=max(8, int(T * lams.max() / math.pi) + 1))
    return np.asarray(res.value)


def factorization_residual(f, lam, rtol=1e-10):
    """|f̂(λ) - ∫ Af(t) cos(λt) dt| for real λ, both sides by independent quadrature."""
    from packlp.spectra import SpectralPoint, spherical_transform

    lam = float(lam)
    if lam < 0:
        lam = -lam
    lhs = spherical_transform(f.geometry, f, SpectralPoint("hyperbolic_real", lam), rtol=rtol)
    rhs = float(cosine_transform(abel_forward(f), [lam], rtol=rtol)[0])
    return abs(lhs - rhs)


@dataclass
class PushforwardResult:
    """Pushforward of a hyperbolic witness to the line and its 1-D certificate."""

    function: RadialFunction
    certificate: object
    bound: float
    abel_deviation: Optional[float] = None
    tolerance_event: bool = False


def witness_pushforward(certificate, r=None, policy=None, margin_tol=1e-10):
    """Push a certified hyperbolic witness to the line via A and re-certify it.

    Raises :class:`CertificationFailure` if a relative (W1)/(W2) margin of the
    transported function is below ``-margin_tol``.  Smaller violations (the
    hyperbolic certificate treats envelope-negligible tails as nonpositive)
    are returned with ``tolerance_event`` set and logged.
    """
    from packlp.certify import CertifyPolicy, certify_witness

    f = certificate.function
    r = certificate.r if r is None else r
    if certificate.verdict != "certified":
        raise CertificationFailure(f"input is not a certified witness ({certificate.reason})", certificate)
    deviation = None
    if f.basis is not None and f.basis.family == "gauss_poly":
        # A f_k = g_k exactly, so Af is the 1-D Laguerre-Gauss combination
        from packlp.bases import LaguerreGaussBasis

        lb = LaguerreGaussBasis(Euclidean(1, f.geometry.measure_scale), f.basis.degree, f.basis.scale)
        line = RadialFunction.from_basis(lb, f.coefficients, label="abel pushforward")
        ts = np.linspace(0.0, 2.0 * r + f.basis.scale, 7)
        num = abel_forward_values(f, ts)
        deviation = float(np.max(np.abs(num - line(ts))) / max(abs(line(np.zeros(1))[0]), 1e-300))
    else:
        Af = abel_forward(f)
        line = RadialFunction(Euclidean(1), Af.evaluator, Af.envelope, basis_id="abel_pushforward",
                              label=Af.label)
    pol = policy or CertifyPolicy()
    cert = certify_witness(Euclidean(1, line.geometry.measure_scale), r, line, pol)
    event = False
    if cert.verdict != "certified":
        if min(cert.w1_margin, cert.w2_margin) < -margin_tol or not cert.fhat_one > 0:
            raise CertificationFailure(f"pushforward rejected: {cert.reason}", cert)
        event = True
        log.warning("pushforward within numerical tolerance only: %s", cert.reason)
    bound = ball_volume(line.geometry, r) * cert.fe / cert.fhat_one
    return PushforwardResult(line, cert, bound, deviation, event)
