"""Radial coordinates, Haar densities, ball volumes and radial functions for
Euclidean space, real hyperbolic space, the round sphere and the Heisenberg
group.

Radial coordinates are the distance t from the base point, except on the
Heisenberg group, where a bi-K-invariant function depends on the pair
(t, s) = (central coordinate, |v|).  Distances there use the Cygan-Koranyi
norm N(t, s) = (t^2 + s^4)^(1/4), which satisfies N(r^2 t, r s) = r N(t, s).
"""
import math
import threading
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import special

from packlp.errors import DegenerateWitness, DomainError, EnvelopeViolation, IntegrationFailure
from packlp.quadrature import integrate, integrate_2d

KINDS = ("euclidean", "hyperbolic", "sphere", "heisenberg")
_MIN_N = {"euclidean": 1, "hyperbolic": 2, "sphere": 2, "heisenberg": 1}


@dataclass(frozen=True)
class GeometryDescriptor:
    """One of the four supported spaces.

    ``measure_scale`` multiplies the radial Haar density; every bound is
    invariant under it.
    """

    kind: str
    n: int
    measure_scale: float = 1.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DomainError(f"unknown geometry {self.kind!r}")
        if int(self.n) != self.n or self.n < _MIN_N[self.kind]:
            raise DomainError(f"{self.kind} needs integer n >= {_MIN_N[self.kind]}, got {self.n}")
        if not (math.isfinite(self.measure_scale) and self.measure_scale > 0):
            raise DomainError("measure_scale must be positive and finite")

    @property
    def rho(self):
        if self.kind != "hyperbolic":
            raise DomainError("rho is defined for hyperbolic space only")
        return 0.5 * (self.n - 1)

    @property
    def homogeneous_dimension(self):
        if self.kind != "heisenberg":
            raise DomainError("homogeneous dimension is defined for the Heisenberg group only")
        return 2 * self.n + 2

    @property
    def radial_rank(self):
        """Number of radial coordinates (2 on the Heisenberg group)."""
        return 2 if self.kind == "heisenberg" else 1

    @property
    def diameter(self):
        return math.pi if self.kind == "sphere" else math.inf

    def with_scale(self, c):
        return GeometryDescriptor(self.kind, self.n, self.measure_scale * c)

    def to_config(self):
        cfg = {"geometry": self.kind, "n": self.n}
        if self.measure_scale != 1.0:
            cfg["measure_scale"] = self.measure_scale
        return cfg

    def __str__(self):
        return f"{self.kind}({self.n})"


def Euclidean(n, measure_scale=1.0):
    return GeometryDescriptor("euclidean", n, measure_scale)


def Hyperbolic(n, measure_scale=1.0):
    return GeometryDescriptor("hyperbolic", n, measure_scale)


def Sphere(n, measure_scale=1.0):
    return GeometryDescriptor("sphere", n, measure_scale)


def Heisenberg(n, measure_scale=1.0):
    return GeometryDescriptor("heisenberg", n, measure_scale)


def from_config(cfg):
    """Build a descriptor from ``{"geometry": "hyperbolic", "n": 3}``."""
    kind = str(cfg["geometry"]).lower()
    if kind == "euclidean_radial":
        kind = "euclidean"
    return GeometryDescriptor(kind, int(cfg["n"]), float(cfg.get("measure_scale", 1.0)))


def sphere_area(d):
    """Surface area of the unit sphere S^(d-1) in R^d."""
    return 2.0 * math.pi ** (0.5 * d) / math.gamma(0.5 * d)


def ck_norm(t, s):
    """Cygan-Koranyi norm (t^2 + s^4)^(1/4)."""
    t = np.asarray(t, dtype=float)
    s = np.asarray(s, dtype=float)
    return (t * t + s ** 4) ** 0.25


def ck_polar(R, phi):
    """Map CK-polar coordinates (R, phi), phi in [0, pi], to (t, s)."""
    R = np.asarray(R, dtype=float)
    phi = np.asarray(phi, dtype=float)
    return R * R * np.cos(phi), R * np.sqrt(np.abs(np.sin(phi)))


def _check_domain(geom, t):
    t = np.asarray(t, dtype=float)
    if np.any(~np.isfinite(t)) or np.any(t < 0):
        raise DomainError("radial coordinate must be finite and non-negative")
    if geom.kind == "sphere" and np.any(t > math.pi + 1e-12):
        raise DomainError("sphere radial coordinate must lie in [0, pi]")
    return t


def radial_density(geom, t, s=None):
    """Radial Haar density w with ∫_G F dm = ∫ F(t) w(t) dt for radial F.

    On the Heisenberg group pass both ``t`` (central coordinate, any real)
    and ``s = |v| >= 0``; the density lives on the half-plane.
    """
    c = geom.measure_scale
    if geom.kind == "heisenberg":
        if s is None:
            raise DomainError("Heisenberg radial density needs (t, s)")
        t = np.asarray(t, dtype=float)
        s = np.asarray(s, dtype=float)
        if np.any(~np.isfinite(t)) or np.any(~np.isfinite(s)) or np.any(s < 0):
            raise DomainError("need finite t and s >= 0")
        out = c * sphere_area(2 * geom.n) * s ** (2 * geom.n - 1) * np.ones_like(t)
        return float(out) if out.ndim == 0 else out
    t = _check_domain(geom, t)
    n = geom.n
    if geom.kind == "euclidean":
        out = c * sphere_area(n) * t ** (n - 1)
    elif geom.kind == "hyperbolic":
        out = c * sphere_area(n) * np.sinh(t) ** (n - 1)
    else:
        out = c * sphere_area(n) * np.sin(t) ** (n - 1)
    return float(out) if np.ndim(out) == 0 else out


_CN_CACHE = {}
_CN_LOCK = threading.Lock()


def heisenberg_unit_ball(n):
    """C_n: Haar volume of the unit CK ball, computed once by 2-D quadrature."""
    with _CN_LOCK:
        if n not in _CN_CACHE:
            area = sphere_area(2 * n)
            # CK-polar Jacobian: dt ds = R^2 / sqrt(sin phi) dR dphi
            res = integrate_2d(lambda R, phi: area * R ** (2 * n + 1) * np.sin(phi) ** (n - 1),
                               (0.0, 1.0), (0.0, math.pi), rtol=1e-14)
            _CN_CACHE[n] = float(res.value)
        return _CN_CACHE[n]


def ball_volume(geom, r):
    """Haar measure of the ball of radius r about the base point."""
    r = float(r)
    if not (r > 0 and math.isfinite(r)):
        raise DomainError("radius must be positive and finite")
    c = geom.measure_scale
    n = geom.n
    if geom.kind == "euclidean":
        return c * math.pi ** (0.5 * n) / math.gamma(0.5 * n + 1) * r ** n
    if geom.kind == "heisenberg":
        return c * heisenberg_unit_ball(n) * r ** (2 * n + 2)
    if geom.kind == "sphere" and r > math.pi + 1e-12:
        raise DomainError("sphere ball radius must not exceed pi")
    r = min(r, math.pi) if geom.kind == "sphere" else r
    if n == 2:
        if geom.kind == "hyperbolic":
            base = 2.0 * math.sinh(0.5 * r) ** 2
        else:
            base = 2.0 * math.sin(0.5 * r) ** 2
        return c * 2.0 * math.pi * base
    g = np.sinh if geom.kind == "hyperbolic" else np.sin
    res = integrate(lambda t: g(t) ** (n - 1), 0.0, r, rtol=1e-14)
    return c * sphere_area(n) * float(res.value)


@dataclass(frozen=True)
class Envelope:
    """Decay bound |f| <= A·E(t)·exp(-kappa·t^2) for t >= radius.

    On the Heisenberg group t is the CK norm.  ``E`` is 1 except on
    hyperbolic space, where E(t) = cosh(t)^-(n-1).  ``amplitude = 0`` declares
    compact support inside ``radius``.
    """

    amplitude: float
    decay: float
    radius: float

    def __post_init__(self):
        if self.amplitude < 0 or self.radius < 0:
            raise DomainError("envelope amplitude and radius must be non-negative")
        if self.amplitude > 0 and not self.decay > 0:
            raise DomainError("envelope decay must be positive")

    @property
    def compact(self):
        return self.amplitude == 0.0

    def bound(self, geom, t):
        t = np.asarray(t, dtype=float)
        if self.compact:
            return np.zeros_like(t)
        out = self.amplitude * np.exp(-self.decay * t * t)
        if geom.kind == "hyperbolic":
            out = out / np.cosh(np.minimum(t, 700.0)) ** (geom.n - 1)
        return out

    def tail_integral(self, geom, T):
        """Upper bound for ∫ |f| dm over the region beyond T (T >= radius)."""
        if self.compact or geom.kind == "sphere":
            return 0.0
        A, k, n = self.amplitude, self.decay, geom.n
        scale = geom.measure_scale
        if geom.kind == "euclidean":
            h = 0.5 * n
            return scale * A * sphere_area(n) * math.gamma(h) * special.gammaincc(h, k * T * T) / (2 * k ** h)
        if geom.kind == "hyperbolic":
            return scale * A * sphere_area(n) * math.sqrt(math.pi) / (2 * math.sqrt(k)) * special.erfc(math.sqrt(k) * T)
        ang = math.sqrt(math.pi) * math.gamma(0.5 * n) / math.gamma(0.5 * (n + 1))
        return (scale * A * sphere_area(2 * n) * ang * math.gamma(n + 1)
                * special.gammaincc(n + 1, k * T * T) / (2 * k ** (n + 1)))

    def to_dict(self):
        return {"amplitude": self.amplitude, "decay": self.decay, "radius": self.radius}


@dataclass
class RadialFunction:
    """A bi-K-invariant function given by its radial profile.

    Parameters
    ----------
    geometry : GeometryDescriptor
    evaluator : callable
        ``f(t)`` on arrays (``f(t, s)`` on the Heisenberg group).
    envelope : Envelope or None
        Decay bound; ``None`` is allowed on the compact sphere only.
    basis_id : str
        Identifier of the expansion basis (``"custom"`` for plain callables).
    coefficients : ndarray
        Expansion coefficients when ``basis`` is given.
    basis : object, optional
        A witness basis providing closed-form values and transforms.
    breakpoints : tuple of float
        Radii where the profile is not smooth; used as quadrature edges.
    """

    geometry: GeometryDescriptor
    evaluator: Callable
    envelope: Optional[Envelope] = None
    basis_id: str = "custom"
    coefficients: np.ndarray = field(default_factory=lambda: np.zeros(0))
    basis: object = None
    breakpoints: tuple = ()
    label: str = ""

    def __post_init__(self):
        if self.envelope is None and self.geometry.kind != "sphere":
            raise DomainError("non-compact geometries need a decay envelope")
        self.coefficients = np.asarray(self.coefficients, dtype=float)

    def __call__(self, *coords):
        return self.evaluator(*coords)

    @classmethod
    def from_basis(cls, basis, coefficients, label=""):
        coef = np.asarray(coefficients, dtype=float)
        if coef.shape != (basis.size,):
            raise DomainError(f"expected {basis.size} coefficients, got {coef.shape}")
        return cls(geometry=basis.geometry, evaluator=basis.evaluator(coef),
                   envelope=basis.envelope(coef), basis_id=basis.family, coefficients=coef,
                   basis=basis, breakpoints=tuple(basis.breakpoints), label=label)

    def value_at_identity(self):
        if self.basis is not None:
            return float(self.basis.value_at_identity() @ self.coefficients)
        if self.geometry.kind == "heisenberg":
            return float(np.asarray(self.evaluator(np.zeros(1), np.zeros(1)))[0])
        return float(np.asarray(self.evaluator(np.zeros(1)))[0])

    def scaled(self, c):
        """The function c·f (same envelope shape, amplitude scaled)."""
        env = self.envelope
        if env is not None and not env.compact:
            env = Envelope(env.amplitude * abs(c), env.decay, env.radius)
        ev = self.evaluator
        return RadialFunction(self.geometry, lambda *x: c * ev(*x), env, self.basis_id,
                              self.coefficients * c, self.basis, self.breakpoints, self.label)


def zero_function(geom):
    env = Envelope(0.0, 1.0, 0.0)
    if geom.kind == "heisenberg":
        ev = lambda t, s: np.zeros(np.broadcast(np.asarray(t), np.asarray(s)).shape)
    else:
        ev = lambda t: np.zeros(np.shape(t))
    return RadialFunction(geom, ev, env, label="zero")


def envelope_sample_points(geom, env, count=64):
    """Log-spaced radii beyond the envelope radius where the bound is checked."""
    start = max(env.radius, 1e-3)
    if env.compact:
        stop = start * 4.0 + 1.0
    else:
        # stop where the envelope is far below double precision
        stop = max(start * 1.5, math.sqrt(745.0 / env.decay))
        if geom.kind == "sphere":
            stop = math.pi
    stop = min(stop, math.pi) if geom.kind == "sphere" else stop
    if stop <= start:
        return np.array([start])
    return np.geomspace(start, stop, count)


def validate_envelope(f, count=64, rtol=1e-9):
    """Check the declared envelope at ``count`` log-spaced radii.

    Raises :class:`EnvelopeViolation` with the worst offender.
    """
    env = f.envelope
    geom = f.geometry
    if env is None:
        return
    R = envelope_sample_points(geom, env, count)
    bound = env.bound(geom, R)
    if geom.kind == "heisenberg":
        phis = np.linspace(0.0, math.pi / 2, 7)
        RR, PP = np.meshgrid(R, phis, indexing="ij")
        t, s = ck_polar(RR.ravel(), PP.ravel())
        vals = np.abs(np.asarray(f(t, s))).reshape(RR.shape).max(axis=1)
    else:
        vals = np.abs(np.asarray(f(R), dtype=float))
    excess = vals - bound * (1 + rtol) - 1e-300
    if np.any(excess > 0):
        i = int(np.argmax(excess))
        raise EnvelopeViolation(f"|f({R[i]:.6g})| = {vals[i]:.3e} exceeds envelope {bound[i]:.3e}")


def _integrate_radial(geom, f, weight_fn, T, rtol, atol):
    if geom.kind == "heisenberg":
        n = geom.n
        area = sphere_area(2 * n)

        def integrand(R, phi):
            t, s = ck_polar(R, phi)
            return np.asarray(f(t, s), dtype=float) * weight_fn(t, s) * area * R ** (2 * n + 1) * np.sin(phi) ** (n - 1)

        return integrate_2d(integrand, (0.0, T), (0.0, math.pi), rtol=rtol, atol=atol,
                            initial=(max(2, int(math.ceil(T))), 2))
    pts = [p for p in f.breakpoints if 0 < p < T]

    def integrand(t):
        return np.asarray(f(t), dtype=float) * weight_fn(t) * radial_density(geom, t)

    return integrate(integrand, 0.0, T, rtol=rtol, atol=atol, points=pts, initial=4)


def radial_integral(geom, f, weight_fn=None, rtol=1e-9):
    """∫ f·weight dm over the whole space with envelope tail control.

    Returns (value, error bound); the bound includes the truncated tail.
    """
    if weight_fn is None:
        weight_fn = (lambda t, s: 1.0) if geom.kind == "heisenberg" else (lambda t: 1.0)
    unit = GeometryDescriptor(geom.kind, geom.n)
    env = f.envelope
    bounded = geom.kind == "sphere" or env.compact
    if geom.kind == "sphere":
        T = math.pi
    elif env.compact:
        T = env.radius
        if T == 0.0:
            return 0.0, 0.0
    else:
        T = max(env.radius, 1.0)
    tail = 0.0
    for _ in range(60):
        res = _integrate_radial(unit, f, weight_fn, T, 0.25 * rtol, 0.0)
        value = float(res.value)
        if bounded:
            break
        tail = env.tail_integral(unit, T)
        if tail <= 0.25 * rtol * abs(value) or tail <= 1e-300:
            break
        T *= 1.3
    else:
        raise IntegrationFailure("envelope tail never dropped below tolerance", value=value, error=tail)
    c = geom.measure_scale
    return c * value, c * (float(np.max(res.error)) + tail)


def trivial_transform(geom, f, rtol=1e-9):
    """f̂(1): the Haar integral of f, by adaptive quadrature plus envelope tail."""
    value, err = radial_integral(geom, f, rtol=rtol)
    if err > max(rtol * abs(value), 1e-300) and abs(value) > 0:
        raise IntegrationFailure(f"trivial transform error {err:.3g} exceeds tolerance", value=value, error=err)
    return value


def bound_ratio(geom, r, fe, fhat_one):
    """m(B(r))·f(e)/f̂(1); raises DegenerateWitness unless f̂(1) > 0."""
    if not fhat_one > 0:
        raise DegenerateWitness(f"trivial transform must be positive, got {fhat_one}")
    return ball_volume(geom, r) * fe / fhat_one
