"""Finite witness bases with closed-form values, transforms and tail arguments.

Families
--------
``gauss_poly``
    Laguerre-Gaussian functions L_k^(α)(2πt²/a²)·exp(-πt²/a²) on R^n
    (α = n/2 - 1), eigenfunctions of the radial Fourier transform.  On
    hyperbolic space the same one-dimensional profiles (α = -1/2) are pulled
    back through the inverse Abel transform, so f̂_k = ĝ_k.
``tent``
    Triangle functions max(0, 1 - |t|/w) on the line, nonnegative weights.
``sphere_harmonic``
    Spherical functions φ_l on S^n, l = 0..L.
``heis_heat``
    Heisenberg heat kernels p_σ (see :mod:`packlp.heisenberg`).

Every basis exposes element values on the forbidden region, the closed-form
spectral rows, identity values and the tail arguments used by the
certifier.  Spatial and spectral "segments" describe the continuous
parameter ranges the certifier samples.
"""
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from packlp import abel, specfun
from packlp.errors import DomainError, SpectrumMismatch
from packlp.geometry import Envelope, GeometryDescriptor, from_config, sphere_area
from packlp.spectra import SpectralGrid, SpectralPoint, check_point, trivial_point

# relative size below which a function value is treated as numerically zero
NEGLIGIBLE = 1e-16


@dataclass
class TailReport:
    """Outcome of a tail argument beyond ``radius``.

    ``argument`` names the reasoning; ``bound`` is an absolute bound on |f|
    (or |f̂|) beyond ``radius`` when the argument is envelope-based.
    """

    argument: str
    holds: bool
    radius: float
    bound: float = 0.0
    detail: str = ""

    def to_dict(self):
        return {"argument": self.argument, "holds": bool(self.holds), "radius": _finite(self.radius),
                "bound": self.bound, "detail": self.detail}


def _finite(x):
    return float(x) if math.isfinite(x) else None


@dataclass(frozen=True)
class Segment:
    """A parameter interval sampled by the certifier.

    ``kind`` is "spatial" or a spectral family; ``discrete`` segments hold
    integer parameters (sphere degrees).
    """

    kind: str
    lo: float
    hi: float
    discrete: bool = False


def fujiwara_bound(p):
    """Upper bound on the moduli of the roots of Σ p_j y^j (ascending coefficients)."""
    p = np.asarray(p, dtype=float)
    nz = np.nonzero(p)[0]
    if nz.size == 0:
        return math.inf
    d = int(nz[-1])
    if d == 0:
        return 0.0
    lead = abs(p[d])
    terms = [(abs(p[d - j]) / lead) ** (1.0 / j) for j in range(1, d)]
    terms.append((abs(p[0]) / (2 * lead)) ** (1.0 / d))
    return 2.0 * max(terms)


def laguerre_monomials(K, alpha):
    """Matrix M with L_k^(α)(y) = Σ_j M[k, j] y^j for k, j = 0..K."""
    M = np.zeros((K + 1, K + 1))
    for k in range(K + 1):
        j = np.arange(k + 1)
        M[k, :k + 1] = (-1.0) ** j * special.binom(k + alpha, k - j) / special.factorial(j)
    return M


def _amplitude(monomials):
    # sup_y |y^j| e^{-y/4} = (4j/e)^j, so |P(y)| e^{-y/2} <= A e^{-y/4}
    j = np.arange(monomials.shape[-1])
    with np.errstate(divide="ignore"):
        w = np.where(j > 0, (4.0 * j / math.e) ** j, 1.0)
    return np.abs(monomials) @ w


class WitnessBasis:
    """Common interface; see the module docstring."""

    family = "abstract"
    geometry: GeometryDescriptor
    size: int
    breakpoints = ()
    margins = (0.0, 0.0)
    coefficient_bounds = None

    # -- spatial side -------------------------------------------------
    def values(self, t):
        """Element values at radii ``t``, shape (len(t), size)."""
        raise NotImplementedError

    def value_at_identity(self):
        return self.values(np.zeros(1))[0]

    def evaluator(self, coef):
        coef = np.asarray(coef, dtype=float)

        def ev(t):
            t = np.asarray(t, dtype=float)
            return (self.values(np.abs(t).ravel()) @ coef).reshape(t.shape)

        return ev

    def envelope(self, coef):
        raise NotImplementedError

    def spatial_extent(self, r):
        """Radius beyond which every element is negligible; spatial LP grids end here."""
        raise NotImplementedError

    def spatial_segments(self, r):
        return [Segment("spatial", 2.0 * r, self.spatial_extent(r))]

    def margin_weight(self, t):
        """Decay profile multiplying the W1 margin at radius t."""
        return np.ones(np.shape(t))

    # -- spectral side ------------------------------------------------
    def transform(self, points):
        """Rows f̂_k(σ) for each spectral point, shape (len(points), size)."""
        raise NotImplementedError

    def trivial_row(self):
        return self.transform([trivial_point(self.geometry)])[0]

    def spectral_values(self, kind, params):
        return self.transform([self.point(kind, p) for p in np.atleast_1d(params)])

    def point(self, kind, value):
        return SpectralPoint(kind, float(value))

    def spectral_segments(self):
        raise NotImplementedError

    def spectral_margin_weight(self, kind, params):
        return np.ones(np.shape(params))

    def default_spectral_grid(self, refinement=0):
        raise NotImplementedError

    def default_spatial_spacing(self, r):
        return 0.001 * 2.0 * r

    # -- tails --------------------------------------------------------
    def w1_tail(self, coef, r):
        raise NotImplementedError

    def w2_tail(self, coef):
        raise NotImplementedError

    def to_dict(self):
        raise NotImplementedError

    def _check_points(self, points):
        for p in points:
            check_point(self.geometry, p)


class LaguerreGaussProfile:
    """P_k(t) = L_k^(α)(γt²)·exp(-γt²/2), k = 0..K, with γ = 2π/a²."""

    def __init__(self, K, alpha, a):
        if K < 0:
            raise DomainError("degree must be non-negative")
        if not a > 0:
            raise DomainError("scale must be positive")
        self.K = int(K)
        self.alpha = float(alpha)
        self.a = float(a)
        self.gamma = 2.0 * math.pi / (a * a)
        self.beta = 0.5 * self.gamma
        self.monomials = laguerre_monomials(self.K, self.alpha)

    def table_y(self, y):
        y = np.atleast_1d(np.asarray(y, dtype=float)).ravel()
        with np.errstate(under="ignore"):
            return (specfun.genlaguerre_table(self.K, self.alpha, y) * np.exp(-0.5 * y)).T

    def table(self, t):
        t = np.atleast_1d(np.asarray(t, dtype=float)).ravel()
        return self.table_y(self.gamma * t * t)

    def poly_derivs(self, v0, imax):
        # d^i/dv^i L_k(γv) / i! = γ^i (-1)^i L_{k-i}^(α+i)(γv) / i!
        v0 = np.atleast_1d(np.asarray(v0, dtype=float))
        out = np.zeros((v0.size, imax + 1, self.K + 1))
        y = self.gamma * v0
        for i in range(imax + 1):
            if i > self.K:
                break
            tab = specfun.genlaguerre_table(self.K - i, self.alpha + i, y)
            out[:, i, i:] = ((-self.gamma) ** i / math.factorial(i)) * tab.T
        return out

    def amplitudes(self, coef=None):
        """A with |Σ c_k P_k(t)| <= A·exp(-γt²/4); per element when coef is None."""
        if coef is None:
            return _amplitude(self.monomials)
        return float(_amplitude(np.asarray(coef) @ self.monomials))

    def extent(self, rel=NEGLIGIBLE):
        """t beyond which every element is below rel·(its amplitude)·... in absolute terms."""
        amp = self.amplitudes().max()
        base = np.abs(self.table(np.zeros(1))[0]).max()
        # A e^{-γT²/4} <= rel * base
        return math.sqrt(max(4.0 * math.log(amp / (rel * base)) / self.gamma, 0.0))


class LaguerreGaussBasis(WitnessBasis):
    """Euclidean ``gauss_poly`` basis of degree K and scale a."""

    family = "gauss_poly"
    margins = (1e-7, 1e-7)

    def __init__(self, geometry, degree, scale=1.0):
        if geometry.kind != "euclidean":
            raise DomainError("LaguerreGaussBasis lives on Euclidean space")
        self.geometry = geometry
        self.degree = int(degree)
        self.scale = float(scale)
        self.profile = LaguerreGaussProfile(degree, 0.5 * geometry.n - 1.0, scale)
        self.size = self.degree + 1

    def values(self, t):
        return self.profile.table(t)

    def envelope(self, coef):
        return Envelope(max(self.profile.amplitudes(coef), 1e-300), 0.25 * self.profile.gamma, 0.0)

    def spatial_extent(self, r):
        return max(self.profile.extent(), 2.0 * r * 1.5)

    def margin_weight(self, t):
        return _shape_weight(self.profile.table(t))

    def _fourier_scale(self):
        n = self.geometry.n
        return self.geometry.measure_scale * self.scale ** n * (-1.0) ** np.arange(self.size)

    def _spectral_y(self, lam):
        lam = np.asarray(lam, dtype=float)
        return self.scale ** 2 * lam * lam / (2.0 * math.pi)

    def spectral_values(self, kind, params):
        return self.profile.table_y(self._spectral_y(params)) * self._fourier_scale()

    def transform(self, points):
        self._check_points(points)
        lam = np.array([p.value for p in points], dtype=float)
        return self.spectral_values("euclidean", lam)

    def spectral_extent(self):
        # the transform is the same profile with a -> 2π/a
        amp = self.profile.amplitudes().max()
        base = np.abs(self.profile.table(np.zeros(1))[0]).max()
        y = 2.0 * math.log(amp / (NEGLIGIBLE * base)) * 2.0
        return math.sqrt(2.0 * math.pi * y) / self.scale

    def spectral_segments(self):
        return [Segment("euclidean", 0.0, self.spectral_extent())]

    def spectral_margin_weight(self, kind, params):
        return _shape_weight(self.profile.table_y(self._spectral_y(params)))

    def default_spectral_grid(self, refinement=0, spacing=None):
        top = self.spectral_extent()
        h = (spacing if spacing is not None else top / 6000.0) / 2 ** refinement
        return _ladder_grid(self.geometry, "euclidean", top, h)

    def w1_tail(self, coef, r):
        p = np.asarray(coef) @ self.profile.monomials
        return _polynomial_tail(p, self.profile.gamma, sign=-1, envelope=self.envelope(coef),
                                geom=self.geometry)

    def w2_tail(self, coef):
        q = (np.asarray(coef) * self._fourier_scale()) @ self.profile.monomials
        gamma_hat = self.scale ** 2 / (2.0 * math.pi)
        amp = float(_amplitude(q))
        return _polynomial_tail(q, gamma_hat, sign=+1,
                                envelope=Envelope(max(amp, 1e-300), 0.25 * gamma_hat, 0.0),
                                geom=self.geometry)

    def to_dict(self):
        return {"family": self.family, "geometry": self.geometry.to_config(),
                "degree": self.degree, "scale": self.scale}


def _shape_weight(table):
    # max over elements, normalized to 1 at the origin of the profile
    w = np.abs(table).max(axis=1)
    return w / max(w.max(), 1e-300)


def _polynomial_tail(p, gamma, sign, envelope, geom):
    """Sign of exp(-γt²/2)·Σ p_j (γt²)^j beyond the largest root of the polynomial."""
    nz = np.nonzero(p)[0]
    if nz.size == 0:
        return TailReport("polynomial_root_bound", True, 0.0, 0.0, "identically zero")
    lead = p[nz[-1]]
    Y = fujiwara_bound(p)
    radius = math.sqrt(Y / gamma) if math.isfinite(Y) else math.inf
    holds = bool(sign * lead > 0)
    detail = f"degree {int(nz[-1])}, leading coefficient {lead:.6e}"
    return TailReport("polynomial_root_bound", holds, radius, 0.0, detail)


def _ladder_grid(geom, kind, top, h, extra=()):
    count = int(math.floor(top / h + 1e-9))
    pts = [SpectralPoint(kind, j * h) for j in range(count + 1) if kind != "hyperbolic_imag" or j > 0]
    return SpectralGrid(geom, tuple(pts) + tuple(extra), {"max_" + kind: top}, h)


class TentBasis(WitnessBasis):
    """Triangles of widths w_j = 2r·j/N on the line, combined with nonnegative weights."""

    family = "tent"
    margins = (0.0, 0.0)

    def __init__(self, geometry, size, r):
        if geometry.kind != "euclidean" or geometry.n != 1:
            raise DomainError("tent basis is one-dimensional")
        if size < 1:
            raise DomainError("need at least one tent")
        self.geometry = geometry
        self.size = int(size)
        self.r = float(r)
        self.widths = 2.0 * r * np.arange(1, size + 1) / size
        self.breakpoints = tuple(self.widths)
        self.coefficient_bounds = [(0.0, None)] * self.size

    def values(self, t):
        t = np.abs(np.atleast_1d(np.asarray(t, dtype=float)).ravel())
        return np.maximum(0.0, 1.0 - t[:, None] / self.widths[None, :])

    def envelope(self, coef):
        return Envelope(0.0, 1.0, float(self.widths.max()))

    def spatial_extent(self, r):
        return max(float(self.widths.max()), 2.0 * r) * 2.0

    def spectral_values(self, kind, params):
        lam = np.atleast_1d(np.asarray(params, dtype=float))
        x = np.outer(lam, self.widths) / (2.0 * math.pi)
        return self.geometry.measure_scale * self.widths[None, :] * np.sinc(x) ** 2

    def transform(self, points):
        self._check_points(points)
        return self.spectral_values("euclidean", [p.value for p in points])

    def spectral_segments(self):
        return [Segment("euclidean", 0.0, 400.0 * math.pi / self.widths.min())]

    def default_spectral_grid(self, refinement=0, spacing=None):
        top = 40.0 * math.pi / self.widths.min()
        h = (spacing if spacing is not None else top / 400.0) / 2 ** refinement
        return _ladder_grid(self.geometry, "euclidean", top, h)

    def w1_tail(self, coef, r):
        support = float(self.widths[np.asarray(coef) != 0].max()) if np.any(np.asarray(coef) != 0) else 0.0
        return TailReport("compact_support", support <= 2.0 * r, support, 0.0,
                          f"support radius {support:.6g}")

    def w2_tail(self, coef):
        ok = bool(np.all(np.asarray(coef) >= 0))
        return TailReport("nonnegative_combination", ok, 0.0, 0.0,
                          "every element has a nonnegative transform")

    def to_dict(self):
        return {"family": self.family, "geometry": self.geometry.to_config(),
                "size": self.size, "r": self.r}


class SphereHarmonicBasis(WitnessBasis):
    """f = Σ_l c_l φ_l(cos t) on S^n, l = 0..L."""

    family = "sphere_harmonic"
    margins = (1e-9, 0.0)

    def __init__(self, geometry, degree):
        if geometry.kind != "sphere":
            raise DomainError("sphere_harmonic basis lives on the sphere")
        if degree < 0:
            raise DomainError("degree must be non-negative")
        self.geometry = geometry
        self.degree = int(degree)
        self.size = self.degree + 1
        n = geometry.n
        self._dims = np.array([specfun.sphere_dimension(l, n) for l in range(self.size)], dtype=float)

    @property
    def volume(self):
        return self.geometry.measure_scale * sphere_area(self.geometry.n + 1)

    def values(self, t):
        t = np.atleast_1d(np.asarray(t, dtype=float)).ravel()
        return specfun.gegenbauer_table(self.degree, self.geometry.n, np.cos(np.minimum(t, math.pi))).T

    def envelope(self, coef):
        return Envelope(0.0, 1.0, math.pi)

    def spatial_extent(self, r):
        return math.pi

    def spectral_values(self, kind, params):
        ls = np.atleast_1d(np.asarray(params)).astype(int)
        out = np.zeros((ls.size, self.size))
        inside = ls <= self.degree
        out[np.nonzero(inside)[0], ls[inside]] = self.volume / self._dims[ls[inside]]
        return out

    def point(self, kind, value):
        return SpectralPoint("sphere", int(value))

    def transform(self, points):
        self._check_points(points)
        return self.spectral_values("sphere", [int(p.value) for p in points])

    def spectral_segments(self):
        return [Segment("sphere", 0, self.degree + 2, discrete=True)]

    def default_spectral_grid(self, refinement=0, spacing=None):
        return SpectralGrid(self.geometry, tuple(SpectralPoint("sphere", l) for l in range(self.degree + 1)),
                            {"max_degree": self.degree}, 1.0)

    def default_spatial_spacing(self, r):
        return (math.pi - 2.0 * r) / 400.0

    def chebyshev(self, coef):
        """f as a Chebyshev series in x = cos t."""
        L = self.degree
        x = np.cos(np.pi * (np.arange(L + 1) + 0.5) / (L + 1))
        vals = specfun.gegenbauer_table(L, self.geometry.n, x).T @ np.asarray(coef, dtype=float)
        return np.polynomial.Chebyshev.fit(x, vals, L, domain=[-1, 1])

    def forbidden_maximum(self, coef, r):
        """Exact maximum of f over the forbidden cap t in [2r, π] via critical points."""
        cheb = self.chebyshev(coef)
        hi = math.cos(2.0 * r)
        crit = cheb.deriv().roots() if self.degree > 0 else np.array([])
        crit = np.real(crit[np.abs(np.imag(crit)) < 1e-9])
        cand = np.concatenate([[-1.0, hi], crit[(crit > -1.0) & (crit < hi)]])
        vals = cheb(cand)
        i = int(np.argmax(vals))
        return float(vals[i]), float(math.acos(np.clip(cand[i], -1, 1)))

    def w1_tail(self, coef, r):
        return TailReport("compact_space", True, math.pi, 0.0, "forbidden region is a closed cap")

    def w2_tail(self, coef):
        return TailReport("finite_expansion", True, self.degree, 0.0,
                          f"f̂(l) = 0 for l > {self.degree}")

    def to_dict(self):
        return {"family": self.family, "geometry": self.geometry.to_config(), "degree": self.degree}


class AbelGaussBasis(WitnessBasis):
    """Hyperbolic ``gauss_poly`` basis: f_k = A⁻¹ g_k with g_k the 1-D Laguerre-Gaussians.

    The spherical transform satisfies f̂_k(λ) = ĝ_k(λ) for real λ and its
    analytic continuation ĝ_k(is) on the imaginary segment.
    """

    family = "gauss_poly"
    margins = (1e-7, 1e-7)

    def __init__(self, geometry, degree, scale=1.0):
        if geometry.kind != "hyperbolic":
            raise DomainError("AbelGaussBasis lives on hyperbolic space")
        self.geometry = geometry
        self.degree = int(degree)
        self.scale = float(scale)
        self.profile = LaguerreGaussProfile(degree, -0.5, scale)
        self.size = self.degree + 1
        self._interp = None

    # line side
    def line_values(self, t):
        return self.profile.table(np.abs(t))

    def element_x_derivative(self, x, order):
        """(d/dx)^order G_k(x), G_k = g_k∘arccosh; shape (len(x), size)."""
        return abel.gauss_poly_x_derivative(self.profile.poly_derivs, self.profile.beta, x, order).T

    def x_derivative(self, coef, x, order):
        return self.element_x_derivative(x, order) @ np.asarray(coef, dtype=float)

    def line_envelope(self, coef=None):
        amp = self.profile.amplitudes(coef) if coef is not None else self.profile.amplitudes().max()
        return Envelope(max(float(amp), 1e-300), 0.25 * self.profile.gamma, 0.0)

    def line_function(self, coef):
        coef = np.asarray(coef, dtype=float)
        return abel.EvenLineFunction(lambda t: self.line_values(t) @ coef, self.line_envelope(coef),
                                     basis=self, coefficients=coef, label="gauss_poly")

    # hyperbolic side
    def values(self, t):
        t = np.atleast_1d(np.asarray(t, dtype=float)).ravel()
        n = self.geometry.n
        if n % 2:
            q = (n - 1) // 2
            const = abel.odd_inverse_constant(n) * (-1) ** q
            out = np.zeros((t.size, self.size))
            live = t < 700.0
            out[live] = const * self.element_x_derivative(np.cosh(t[live]), q)
            return out
        return np.stack([f(t) for f in self._even_interpolants()], axis=1)

    def _even_interpolants(self):
        if self._interp is None:
            n = self.geometry.n
            items = []
            for k in range(self.size):
                e = np.zeros(self.size)
                e[k] = 1.0
                g = self.line_function(e)
                direct = (lambda g: lambda r: abel.abel_inverse_even_values(g, n, r))(g)
                items.append(abel.PanelInterpolant(direct, g.truncation(1e-18), panels=64))
            self._interp = items
        return self._interp

    @property
    def breakpoints(self):
        if self.geometry.n % 2:
            return ()
        return tuple(self._even_interpolants()[0].edges[1:-1])

    def envelope(self, coef):
        coef = np.asarray(coef, dtype=float)
        g = self.line_function(coef)
        decay = 0.2 * self.profile.gamma
        stop = g.truncation(1e-30)
        return abel.fit_envelope(self.geometry, self.evaluator(coef), decay, 0.0, stop, count=600)

    def spatial_extent(self, r):
        return max(self.profile.extent(), 2.0 * r * 1.5)

    def margin_weight(self, t):
        return _shape_weight(self.values(t))

    def _fourier_scale(self):
        return self.geometry.measure_scale * self.scale * (-1.0) ** np.arange(self.size)

    def spectral_values(self, kind, params):
        p = np.atleast_1d(np.asarray(params, dtype=float))
        y = self.scale ** 2 * p * p / (2.0 * math.pi)
        if kind == "hyperbolic_imag":
            y = -y
        elif kind != "hyperbolic_real":
            raise SpectrumMismatch(f"{kind} is not a hyperbolic family")
        return self.profile.table_y(y) * self._fourier_scale()

    def transform(self, points):
        self._check_points(points)
        out = np.empty((len(points), self.size))
        for kind in ("hyperbolic_real", "hyperbolic_imag"):
            idx = [i for i, p in enumerate(points) if p.kind == kind]
            if idx:
                out[idx] = self.spectral_values(kind, [points[i].value for i in idx])
        return out

    def spectral_extent(self):
        amp = self.profile.amplitudes().max()
        base = np.abs(self.profile.table(np.zeros(1))[0]).max()
        y = 4.0 * math.log(amp / (NEGLIGIBLE * base))
        return math.sqrt(2.0 * math.pi * y) / self.scale

    def spectral_segments(self):
        return [Segment("hyperbolic_real", 0.0, self.spectral_extent()),
                Segment("hyperbolic_imag", 0.0, self.geometry.rho)]

    def spectral_margin_weight(self, kind, params):
        p = np.atleast_1d(np.asarray(params, dtype=float))
        if kind == "hyperbolic_imag":
            return np.ones(p.shape)
        return _shape_weight(self.profile.table_y(self.scale ** 2 * p * p / (2.0 * math.pi)))

    def default_spectral_grid(self, refinement=0, spacing=None, imag_points=16):
        top = self.spectral_extent()
        h = (spacing if spacing is not None else top / 6000.0) / 2 ** refinement
        rho = self.geometry.rho
        J = imag_points * 2 ** refinement
        imag = tuple(SpectralPoint("hyperbolic_imag", rho * j / J) for j in range(1, J + 1))
        grid = _ladder_grid(self.geometry, "hyperbolic_real", top, h, imag)
        grid.bounds["imag_points"] = J
        return grid

    def w1_tail(self, coef, r):
        return _envelope_tail(self.geometry, self.envelope(coef), coef, self, r)

    def w2_tail(self, coef):
        q = (np.asarray(coef) * self._fourier_scale()) @ self.profile.monomials
        gamma_hat = self.scale ** 2 / (2.0 * math.pi)
        rep = _polynomial_tail(q, gamma_hat, sign=+1, envelope=None, geom=self.geometry)
        rep.detail += "; imaginary segment sampled"
        return rep

    def to_dict(self):
        return {"family": self.family, "geometry": self.geometry.to_config(),
                "degree": self.degree, "scale": self.scale}


def _envelope_tail(geom, env, coef, basis, r, rel=1e-13):
    """Envelope bound beyond the radius where it drops below rel·|f(e)|."""
    fe = abs(float(basis.value_at_identity() @ np.asarray(coef)))
    if env.compact:
        return TailReport("compact_support", env.radius <= 2 * r, env.radius, 0.0)
    T = max(env.radius, 2.0 * r)
    target = rel * max(fe, 1e-300)
    while float(env.bound(geom, np.array([T]))[0]) > target:
        T *= 1.05
    bound = float(env.bound(geom, np.array([T]))[0])
    return TailReport("envelope_negligible", True, T, bound,
                      f"|f| <= {bound:.3e} beyond {T:.4g} (relative {rel:g})")


def make_basis(geometry, family, degree=None, scale=None, r=None, **kwargs):
    """Construct a basis by family id with geometry-appropriate defaults."""
    if family == "gauss_poly":
        deg = 12 if degree is None else degree
        a = default_scale(geometry, r) if scale is None else scale
        if geometry.kind == "euclidean":
            return LaguerreGaussBasis(geometry, deg, a)
        if geometry.kind == "hyperbolic":
            return AbelGaussBasis(geometry, deg, a)
        raise DomainError(f"gauss_poly is not available on {geometry.kind}")
    if family == "tent":
        return TentBasis(geometry, 8 if degree is None else degree, 0.5 if r is None else r)
    if family == "sphere_harmonic":
        return SphereHarmonicBasis(geometry, 10 if degree is None else degree)
    if family in ("heis_heat", "heis_gauss_poly"):
        from packlp.heisenberg import HeatKernelBasis
        return HeatKernelBasis(geometry, 10 if degree is None else degree,
                               r=0.5 if r is None else r, **kwargs)
    raise DomainError(f"unknown basis family {family!r}")


def default_scale(geometry, r):
    r = 0.5 if r is None else float(r)
    return 2.2 * r


def basis_from_dict(d):
    geom = from_config(d["geometry"])
    fam = d["family"]
    if fam == "gauss_poly":
        return make_basis(geom, fam, d["degree"], d["scale"])
    if fam == "tent":
        return TentBasis(geom, d["size"], d["r"])
    if fam == "sphere_harmonic":
        return SphereHarmonicBasis(geom, d["degree"])
    if fam == "heis_heat":
        from packlp.heisenberg import HeatKernelBasis
        return HeatKernelBasis.from_dict(d)
    raise DomainError(f"unknown basis family {fam!r}")
