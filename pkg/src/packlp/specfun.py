"""Special functions: Gauss 2F1 on the negative axis, Bessel J, normalized
Laguerre and Gegenbauer polynomials, and Gamma.

Parameters of 2F1 are Python complex numbers (``ComplexParam``).  Every
2F1 value carries an internal error estimate; exceeding the tolerance raises
:class:`~packlp.errors.AccuracyLoss` instead of returning a degraded value.
"""
import math

import numpy as np
from scipy import special

from packlp import kernels
from packlp.errors import AccuracyLoss, DomainError, ParameterPole

ComplexParam = complex

_INT_TOL = 1e-13


def as_complex_param(value):
    """Validate and convert to ``complex``; NaN and Inf are rejected."""
    z = complex(value)
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise DomainError(f"parameter must be finite, got {value!r}")
    return z


def _nonpositive_integer(z):
    if abs(z.imag) > _INT_TOL:
        return None
    k = round(z.real)
    if k <= 0 and abs(z.real - k) <= _INT_TOL * max(1.0, abs(k)):
        return -k
    return None


def _terminating(a, b, c, z, degree):
    z = np.asarray(z, dtype=float)
    term = np.ones_like(z, dtype=complex)
    total = term.copy()
    mag = np.abs(term)
    for k in range(degree):
        term = term * ((a + k) * (b + k) / ((c + k) * (k + 1.0))) * z
        total += term
        mag += np.abs(term)
    return total, 4.0 * np.finfo(float).eps * mag * (degree + 1)


def _start_radius(a, b, c):
    # radius where every series term ratio is at most 1/2
    top = int(2 * max(abs(a), abs(b), abs(c))) + 8
    k = np.arange(top)
    ratio = np.abs((a + k) * (b + k)) / (np.abs(c + k) * (k + 1.0))
    return float(min(0.5, 0.5 / max(1.0, ratio.max())))


def _step_fraction(a, b, c):
    return float(min(0.5, 2.0 / (1.0 + max(abs(a), abs(b), abs(c)))))


def hyp2f1_with_error(a, b, c, z):
    """Return (values, absolute error estimates) of 2F1(a, b; c; z).

    ``z`` may be a scalar or array.  Real z <= 0 is supported in general;
    when a or b is a non-positive integer the terminating polynomial is used
    and any real z is accepted.
    """
    a = as_complex_param(a)
    b = as_complex_param(b)
    c = as_complex_param(c)
    if _nonpositive_integer(c) is not None:
        raise ParameterPole(f"c = {c} is a non-positive integer")
    zarr = np.asarray(z, dtype=float)
    scalar = zarr.ndim == 0
    flat = np.atleast_1d(zarr).ravel()
    if not np.all(np.isfinite(flat)):
        raise DomainError("z must be finite")
    degrees = [d for d in (_nonpositive_integer(a), _nonpositive_integer(b)) if d is not None]
    if degrees:
        vals, errs = _terminating(a, b, c, flat, int(min(degrees)))
    else:
        if np.any(flat > 0):
            raise DomainError("2F1 is implemented for z <= 0 only")
        vals, errs = kernels.hyp2f1_negative(a, b, c, flat, _start_radius(a, b, c),
                                              _step_fraction(a, b, c))
    vals = np.asarray(vals).reshape(np.shape(zarr))
    errs = np.asarray(errs).reshape(np.shape(zarr))
    if scalar:
        return complex(vals), float(errs)
    return vals, errs


def gauss_2f1(a, b, c, z, *, rtol=1e-10, atol=0.0):
    """Gauss hypergeometric function 2F1(a, b; c; z) for z <= 0.

    Parameters
    ----------
    a, b, c : complex
        Parameters; ``c`` must not be a non-positive integer.
    z : float or array_like
        Argument(s), z <= 0.
    rtol, atol : float
        Tolerance on the internal error estimate.

    Returns
    -------
    complex or ndarray of complex

    Raises
    ------
    ParameterPole
        If ``c`` is a non-positive integer.
    AccuracyLoss
        If the error estimate exceeds ``max(atol, rtol*|value|)``.
    """
    vals, errs = hyp2f1_with_error(a, b, c, z)
    bad = np.asarray(errs) > np.maximum(atol, rtol * np.abs(vals))
    if np.any(bad):
        worst = float(np.max(np.asarray(errs) / np.maximum(np.abs(vals), 1e-300)))
        raise AccuracyLoss(f"2F1 error estimate {worst:.3g} exceeds tolerance", estimate=worst)
    return vals


def bessel_j(nu, x):
    """Bessel function of the first kind J_nu(x) for nu >= 0, x >= 0."""
    nu = float(nu)
    xa = np.asarray(x, dtype=float)
    if not math.isfinite(nu) or nu < 0:
        raise DomainError("order must be finite and non-negative")
    if not np.all(np.isfinite(xa)) or np.any(xa < 0):
        raise DomainError("argument must be finite and non-negative")
    out = np.array(special.jv(nu, xa), dtype=float, ndmin=1)
    # jv underflows for subnormal x; the leading series terms are exact to ~x^6 there
    small = np.atleast_1d(xa) < 1e-3
    if np.any(small):
        xs = np.atleast_1d(xa)[small]
        y = xs * xs / 4.0
        lead = np.exp(nu * (np.log(np.where(xs > 0, xs, 1.0)) - math.log(2.0)) - special.gammaln(nu + 1.0))
        lead = np.where(xs > 0, lead, 1.0 if nu == 0 else 0.0)
        out[small] = lead * (1.0 - y / (nu + 1.0) + y * y / (2.0 * (nu + 1.0) * (nu + 2.0)))
    return float(out[0]) if xa.ndim == 0 else out.reshape(xa.shape)


def bessel_ratio(nu, x):
    """Gamma(nu+1) (2/x)^nu J_nu(x), the Bessel function normalized to 1 at 0."""
    xa = np.abs(np.asarray(x, dtype=float))
    out = np.ones_like(xa)
    small = xa < 1e-3
    y = xa[small] ** 2 / 4.0
    out[small] = 1.0 - y / (nu + 1.0) + y * y / (2.0 * (nu + 1.0) * (nu + 2.0))
    big = ~small
    xb = xa[big]
    out[big] = np.exp(special.gammaln(nu + 1.0) + nu * np.log(2.0 / xb)) * special.jv(nu, xb)
    return float(out) if np.ndim(x) == 0 else out


def gamma(x):
    return special.gamma(x)


def loggamma(x):
    return special.gammaln(x)


def laguerre_table(m, alpha, x):
    """Rows k = 0..m of the Laguerre polynomials L_k^(alpha) normalized to 1 at 0."""
    if m < 0:
        raise DomainError("degree must be non-negative")
    if alpha <= -1:
        raise DomainError("alpha must exceed -1")
    xa = np.atleast_1d(np.asarray(x, dtype=float)).ravel()
    out = kernels.laguerre_table(int(m), float(alpha), xa)
    out[:, xa == 0.0] = 1.0
    return out


def laguerre_norm(m, alpha, x):
    """Normalized generalized Laguerre polynomial L_m^(alpha)(x)/L_m^(alpha)(0).

    For integer alpha = n - 1 this equals (n-1)! sum_j C(m,j)(-x)^j/(j+n-1)!.
    The finite sum is used for degrees up to 20 where its terms do not
    cancel (x <= 1); everything else runs the three-term recurrence.
    """
    m = int(m)
    if m < 0:
        raise DomainError("degree must be non-negative")
    xa = np.asarray(x, dtype=float)
    flat = np.atleast_1d(xa).ravel()
    out = np.empty(flat.shape)
    small = np.abs(flat) <= 1.0 if m <= 20 else np.zeros(flat.shape, dtype=bool)
    if np.any(small):
        coef = [math.comb(m, j) * math.exp(math.lgamma(alpha + 1) - math.lgamma(j + alpha + 1))
                for j in range(m + 1)]
        acc = np.zeros(int(small.sum()))
        for cj in reversed(coef):
            acc = acc * (-flat[small]) + cj
        out[small] = acc
    if np.any(~small):
        out[~small] = laguerre_table(m, alpha, flat[~small])[m]
    out = out.reshape(xa.shape)
    return float(out) if xa.ndim == 0 else out


def genlaguerre(k, alpha, x):
    """Unnormalized generalized Laguerre L_k^(alpha)(x)."""
    scale = math.exp(math.lgamma(k + alpha + 1) - math.lgamma(k + 1) - math.lgamma(alpha + 1))
    return scale * laguerre_norm(k, alpha, x)


def genlaguerre_table(kmax, alpha, x):
    """Rows k = 0..kmax of unnormalized L_k^(alpha)(x)."""
    k = np.arange(kmax + 1)
    scale = np.exp(special.gammaln(k + alpha + 1) - special.gammaln(k + 1) - special.gammaln(alpha + 1))
    return scale[:, None] * laguerre_table(kmax, alpha, x)


def gegenbauer_table(L, n, x):
    """Rows l = 0..L of the degree-l spherical functions on S^n at x = cos(t)."""
    if n < 2:
        raise DomainError("sphere dimension must be at least 2")
    xa = np.atleast_1d(np.asarray(x, dtype=float)).ravel()
    if np.any(np.abs(xa) > 1 + 1e-12):
        raise DomainError("x must lie in [-1, 1]")
    return kernels.gegenbauer_table(int(L), 0.5 * (n - 1), np.clip(xa, -1.0, 1.0))


def sphere_poly(l, n, x):
    """Spherical function of degree l on S^n: Gegenbauer C_l^((n-1)/2) normalized at 1."""
    l = int(l)
    if l < 0:
        raise DomainError("degree must be non-negative")
    xa = np.asarray(x, dtype=float)
    out = gegenbauer_table(l, n, xa)[l].reshape(xa.shape)
    return float(out) if xa.ndim == 0 else out


def sphere_dimension(l, n):
    """Dimension of the space of degree-l spherical harmonics on S^n."""
    if l == 0:
        return 1
    return (2 * l + n - 1) * math.comb(l + n - 2, l) // (n - 1)
