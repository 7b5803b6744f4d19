"""Positive-definite spherical functions and spherical transforms.

Spectral parameters per geometry:

* euclidean: frequency λ >= 0, φ_λ(t) = Γ(n/2)(2/λt)^(n/2-1) J_(n/2-1)(λt)
* hyperbolic: real λ >= 0 or imaginary iλ = s ∈ (0, ρ]; φ via 2F1 with z = -sinh²t
* sphere: degree l, φ_l = normalized Gegenbauer polynomial in cos t
* heisenberg: type A (λ ≠ 0, m >= 0) Laguerre functions, type B (τ >= 0) Bessel
"""
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from packlp import specfun
from packlp.errors import DomainError, SpectrumMismatch
from packlp.geometry import GeometryDescriptor, radial_integral

FAMILIES = {
    "euclidean": ("euclidean",),
    "hyperbolic": ("hyperbolic_imag", "hyperbolic_real"),
    "sphere": ("sphere",),
    "heisenberg": ("heisenberg_b", "heisenberg_a"),
}
_ORDER = {k: i for i, k in enumerate(
    ["euclidean", "hyperbolic_imag", "hyperbolic_real", "sphere", "heisenberg_b", "heisenberg_a"])}


@dataclass(frozen=True)
class SpectralPoint:
    """A point of the positive-definite spectrum.

    ``value`` is λ (euclidean, hyperbolic_real, heisenberg_a), the imaginary
    part s (hyperbolic_imag), the degree l (sphere) or τ (heisenberg_b);
    ``m`` is the Laguerre index of heisenberg_a points.
    """

    kind: str
    value: float
    m: int = 0

    def __post_init__(self):
        if self.kind not in _ORDER:
            raise DomainError(f"unknown spectral family {self.kind!r}")
        v = float(self.value)
        object.__setattr__(self, "value", v)
        if not math.isfinite(v):
            raise DomainError("spectral parameter must be finite")
        if self.kind == "sphere" and (v < 0 or v != int(v)):
            raise DomainError("sphere degree must be a non-negative integer")
        if self.kind == "heisenberg_a":
            if v == 0:
                raise DomainError("type-A points need λ ≠ 0")
            if self.m < 0 or int(self.m) != self.m:
                raise DomainError("Laguerre index must be a non-negative integer")
        elif self.kind in ("euclidean", "hyperbolic_real", "heisenberg_b") and v < 0:
            raise DomainError("spectral parameter must be non-negative")
        elif self.kind == "hyperbolic_imag" and not v > 0:
            raise DomainError("imaginary spectral part must be positive")

    def sort_key(self):
        return (_ORDER[self.kind], self.value, self.m)

    def to_dict(self):
        d = {"kind": self.kind, "value": self.value}
        if self.kind == "heisenberg_a":
            d["m"] = self.m
        return d

    @classmethod
    def from_dict(cls, d):
        return cls(d["kind"], float(d["value"]), int(d.get("m", 0)))


def trivial_point(geom):
    """The trivial character of ``geom``."""
    if geom.kind == "euclidean":
        return SpectralPoint("euclidean", 0.0)
    if geom.kind == "hyperbolic":
        return SpectralPoint("hyperbolic_imag", geom.rho)
    if geom.kind == "sphere":
        return SpectralPoint("sphere", 0)
    return SpectralPoint("heisenberg_b", 0.0)


def check_point(geom, sigma):
    if sigma.kind not in FAMILIES[geom.kind]:
        raise SpectrumMismatch(f"{sigma.kind} point is not in the spectrum of {geom}")
    if sigma.kind == "hyperbolic_imag" and sigma.value > geom.rho * (1 + 1e-14):
        raise SpectrumMismatch(f"imaginary part {sigma.value} exceeds rho = {geom.rho}")


@dataclass(frozen=True)
class SpectralGrid:
    """Sorted, duplicate-free spectral sample set containing the trivial character."""

    geometry: GeometryDescriptor
    points: tuple
    bounds: dict = field(default_factory=dict, compare=False)
    spacing: float = 0.0

    def __post_init__(self):
        pts = set(self.points)
        pts.add(trivial_point(self.geometry))
        for p in pts:
            check_point(self.geometry, p)
        object.__setattr__(self, "points", tuple(sorted(pts, key=SpectralPoint.sort_key)))

    def __len__(self):
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    def union(self, other):
        pts = set(self.points) | set(other.points if isinstance(other, SpectralGrid) else other)
        spacing = min(self.spacing, other.spacing) if isinstance(other, SpectralGrid) else self.spacing
        return SpectralGrid(self.geometry, tuple(pts), dict(self.bounds), spacing)

    def to_dict(self):
        return {"geometry": self.geometry.to_config(), "spacing": self.spacing,
                "bounds": self.bounds, "points": [p.to_dict() for p in self.points]}

    @classmethod
    def from_dict(cls, d, geom=None):
        from packlp.geometry import from_config
        g = geom if geom is not None else from_config(d["geometry"])
        return cls(g, tuple(SpectralPoint.from_dict(p) for p in d["points"]),
                   dict(d.get("bounds", {})), float(d.get("spacing", 0.0)))


def _ladder(top, h):
    count = int(math.floor(top / h + 1e-9))
    return np.arange(count + 1) * h


def uniform_grid(geom, max_value=None, spacing=None, *, imag_points=16, max_m=None,
                 max_degree=None, tau_max=None, extra=()):
    """Uniform spectral grid for ``geom`` with nested refinements.

    Halving ``spacing`` (or doubling ``imag_points``) yields a superset.
    """
    pts = list(extra)
    bounds = {}
    if geom.kind == "euclidean":
        pts += [SpectralPoint("euclidean", v) for v in _ladder(max_value, spacing)]
        bounds["max_lambda"] = max_value
    elif geom.kind == "hyperbolic":
        rho = geom.rho
        pts += [SpectralPoint("hyperbolic_real", v) for v in _ladder(max_value, spacing)]
        pts += [SpectralPoint("hyperbolic_imag", rho * j / imag_points) for j in range(1, imag_points + 1)]
        bounds.update(max_lambda=max_value, imag_points=imag_points)
    elif geom.kind == "sphere":
        L = int(max_degree if max_degree is not None else max_value)
        pts += [SpectralPoint("sphere", l) for l in range(L + 1)]
        bounds["max_degree"] = L
        spacing = 1.0
    else:
        lam = _ladder(max_value, spacing)[1:]
        M = int(max_m if max_m is not None else 0)
        pts += [SpectralPoint("heisenberg_a", v, m) for v in lam for m in range(M + 1)]
        tmax = tau_max if tau_max is not None else max_value
        pts += [SpectralPoint("heisenberg_b", v) for v in _ladder(tmax, spacing)]
        bounds.update(max_lambda=max_value, max_m=M, max_tau=tmax)
    return SpectralGrid(geom, tuple(pts), bounds, float(spacing or 0.0))


def spherical_function(geom, sigma, t, s=None):
    """Value of the spherical function φ_σ at radial coordinate t (or (t, s)).

    Type-A Heisenberg values are the real part cos(λt)·ℓ_m(|λ|s²/2)·e^(-|λ|s²/4),
    i.e. the average of the (λ, m) and (-λ, m) characters.
    """
    check_point(geom, sigma)
    n = geom.n
    if geom.kind == "heisenberg":
        if s is None:
            raise DomainError("Heisenberg spherical functions take (t, s)")
        t = np.asarray(t, dtype=float)
        s = np.asarray(s, dtype=float)
        if sigma.kind == "heisenberg_b":
            out = specfun.bessel_ratio(n - 1, sigma.value * s) * np.ones_like(t)
        else:
            lam = abs(sigma.value)
            x = 0.5 * lam * s * s
            shape = np.broadcast(t, s).shape
            lag = specfun.laguerre_table(sigma.m, n - 1, np.broadcast_to(x, shape).ravel())[sigma.m].reshape(shape)
            out = np.cos(sigma.value * t) * lag * np.exp(-0.5 * x)
        return float(out) if np.ndim(out) == 0 else out
    t = np.asarray(t, dtype=float)
    if np.any(t < 0) or np.any(~np.isfinite(t)):
        raise DomainError("radial coordinate must be finite and non-negative")
    if geom.kind == "euclidean":
        out = specfun.bessel_ratio(0.5 * n - 1, sigma.value * t)
    elif geom.kind == "sphere":
        if np.any(t > math.pi + 1e-12):
            raise DomainError("sphere radial coordinate must lie in [0, pi]")
        l = int(sigma.value)
        out = specfun.gegenbauer_table(l, n, np.cos(t).ravel())[l].reshape(t.shape)
    else:
        out = hyperbolic_phi(n, sigma, t)
    return float(out) if np.ndim(out) == 0 else out


def hyperbolic_phi(n, sigma, t):
    """Jacobi function φ_λ(t) = 2F1((ρ+iλ)/2, (ρ-iλ)/2; n/2; -sinh²t)."""
    rho = 0.5 * (n - 1)
    t = np.asarray(t, dtype=float)
    if np.any(t > 300):
        raise DomainError("hyperbolic radial coordinate above 300 is out of range")
    if sigma.kind == "hyperbolic_real":
        a = complex(rho, sigma.value) / 2
        b = complex(rho, -sigma.value) / 2
    else:
        a = complex(rho - sigma.value) / 2
        b = complex(rho + sigma.value) / 2
    z = -np.sinh(t.ravel()) ** 2
    vals = specfun.gauss_2f1(a, b, 0.5 * n, z, rtol=0.0, atol=1e-11)
    return np.real(vals).reshape(t.shape)


def spherical_transform(geom, f, sigma, rtol=1e-8):
    """f̂(σ) = ∫ f·φ_σ dm by adaptive quadrature with envelope tail control."""
    check_point(geom, sigma)
    if f.geometry.kind != geom.kind or f.geometry.n != geom.n:
        raise SpectrumMismatch("function and geometry disagree")
    if geom.kind == "heisenberg":
        weight = lambda t, s: spherical_function(geom, sigma, t, s)
    else:
        weight = lambda t: spherical_function(geom, sigma, t)
    value, _ = radial_integral(geom, f, weight, rtol=rtol)
    return value


def _threads():
    try:
        return max(1, int(os.environ.get("PACKLP_THREADS", "1")))
    except ValueError:
        return 1


def parallel_map(fn, items):
    """Order-preserving map capped by ``PACKLP_THREADS``."""
    items = list(items)
    workers = min(_threads(), len(items))
    if workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def transform_on_grid(geom, f, grid, method="auto", rtol=1e-8):
    """Vector of f̂(σ) over ``grid`` in grid order.

    ``method="auto"`` uses the closed-form transforms of a basis-backed
    function and quadrature otherwise.
    """
    points = grid.points if isinstance(grid, SpectralGrid) else tuple(grid)
    for p in points:
        check_point(geom, p)
    if method not in ("auto", "quadrature", "closed_form"):
        raise DomainError(f"unknown method {method!r}")
    if f.basis is not None and method != "quadrature":
        if f.basis.geometry != geom:
            raise SpectrumMismatch("function and geometry disagree")
        return f.basis.transform(points) @ f.coefficients
    if method == "closed_form":
        raise DomainError("function has no closed-form transform")
    return np.array(parallel_map(lambda p: spherical_transform(geom, f, p, rtol), points))


def product_formula_residual(l, x, y, nodes=128):
    """|avg_k φ_l(g1 k g2) - φ_l(g1) φ_l(g2)| on S² for polar angles acos x, acos y."""
    if l > 10 or l < 0:
        raise DomainError("degree must lie in 0..10")
    psi = 2 * math.pi * np.arange(nodes) / nodes
    cosd = x * y + math.sqrt(max(0.0, 1 - x * x)) * math.sqrt(max(0.0, 1 - y * y)) * np.cos(psi)
    avg = specfun.sphere_poly(l, 2, np.clip(cosd, -1, 1)).mean()
    return abs(avg - specfun.sphere_poly(l, 2, x) * specfun.sphere_poly(l, 2, y))
