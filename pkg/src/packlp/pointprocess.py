"""Lattice packings, point configurations and the Poisson-summation chain.

Used as lower-bound oracles for the LP bounds: explicit packings have
density ≤ any certified bound, and for a lattice Γ with intensity i and a
witness f the chain

    i·f(e)  ≥  i·Σ_Γ f(γ)  =  i²·Σ_{Γ*} f̂  ≥  i²·f̂(1)

is checked numerically, with rigorous truncation bounds on both sums.
"""
import itertools
import json
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, special

from packlp import kernels
from packlp.errors import DimensionTooLarge, DomainError, TailBoundFailure
from packlp.geometry import Euclidean, Sphere, ball_volume, sphere_area

log = logging.getLogger(__name__)

MAX_ENUM_DIM = 8


def lll_reduce(B, delta=0.75):
    """LLL-reduce the rows of B; returns (reduced basis, unimodular U with U·B = reduced)."""
    B = np.array(B, dtype=float)
    n = B.shape[0]
    U = np.eye(n, dtype=np.int64)

    def gso(M):
        Q = np.zeros_like(M)
        mu = np.zeros((n, n))
        for i in range(n):
            v = M[i].copy()
            for j in range(i):
                mu[i, j] = M[i] @ Q[j] / (Q[j] @ Q[j])
                v -= mu[i, j] * Q[j]
            Q[i] = v
        return Q, mu

    Q, mu = gso(B)
    k = 1
    while k < n:
        for j in range(k - 1, -1, -1):
            q = round(mu[k, j])
            if q:
                B[k] -= q * B[j]
                U[k] -= q * U[j]
                Q, mu = gso(B)
        if Q[k] @ Q[k] >= (delta - mu[k, k - 1] ** 2) * (Q[k - 1] @ Q[k - 1]):
            k += 1
        else:
            B[[k, k - 1]] = B[[k - 1, k]]
            U[[k, k - 1]] = U[[k - 1, k]]
            Q, mu = gso(B)
            k = max(k - 1, 1)
    return B, U


@dataclass
class LatticeSpec:
    """A full-rank lattice in R^n spanned by the rows of ``basis``."""

    basis: np.ndarray
    name: str = "custom"

    def __post_init__(self):
        B = np.atleast_2d(np.asarray(self.basis, dtype=float))
        if B.ndim != 2 or B.shape[0] != B.shape[1]:
            raise DomainError("lattice basis must be a square matrix")
        if not np.all(np.isfinite(B)):
            raise DomainError("lattice basis must be finite")
        self.basis = B
        if not abs(np.linalg.det(B)) > 1e-14 * np.prod(np.linalg.norm(B, axis=1)):
            raise DomainError("lattice basis is singular")

    @property
    def n(self):
        return self.basis.shape[0]

    @property
    def covolume(self):
        return float(abs(np.linalg.det(self.basis)))

    @property
    def gram(self):
        return self.basis @ self.basis.T

    def dual(self):
        return LatticeSpec(np.linalg.inv(self.basis).T, self.name + "*")

    def to_dict(self):
        return {"name": self.name, "basis": self.basis.tolist()}

    @classmethod
    def from_name(cls, name):
        """``Z:n``, ``A2``, ``D4``, ``E8`` or a JSON file holding {"basis": [...]}."""
        key = name.strip()
        if key.upper().startswith("Z:"):
            n = int(key[2:])
            if n < 1:
                raise DomainError("Z:n needs n >= 1")
            return cls(np.eye(n), f"Z:{n}")
        if key.upper() == "A2":
            return cls([[1.0, 0.0], [0.5, math.sqrt(3.0) / 2.0]], "A2")
        if key.upper() == "D4":
            return cls([[1, -1, 0, 0], [0, 1, -1, 0], [0, 0, 1, -1], [0, 0, 1, 1]], "D4")
        if key.upper() == "E8":
            B = np.zeros((8, 8))
            B[0, 0] = 2.0
            for i in range(1, 7):
                B[i, i - 1], B[i, i] = -1.0, 1.0
            B[7] = 0.5
            return cls(B, "E8")
        with open(key) as fh:
            data = json.load(fh)
        return cls(np.asarray(data["basis"], dtype=float), data.get("name", key))


def _cholesky_r(basis):
    # lattice vectors are x @ B; |x @ B|² = |R x|² with B·Bᵀ = Rᵀ R
    return np.linalg.cholesky(basis @ basis.T).T


def lattice_vectors(lat, radius):
    """All lattice vectors of norm ≤ radius, with their norms (zero vector included)."""
    B, _ = lll_reduce(lat.basis)
    coords = kernels.enumerate_lattice(_cholesky_r(B), float(radius) ** 2)
    vecs = coords.astype(float) @ B
    return vecs, np.linalg.norm(vecs, axis=1)


def min_distance(lat):
    """Exact minimum norm λ₁ by Fincke-Pohst enumeration of an LLL-reduced basis."""
    if lat.n > MAX_ENUM_DIM:
        raise DimensionTooLarge(f"enumeration is limited to n <= {MAX_ENUM_DIM}, got {lat.n}")
    B, _ = lll_reduce(lat.basis)
    bound = float(np.min(np.einsum("ij,ij->i", B, B)))
    coords = kernels.enumerate_lattice(_cholesky_r(B), bound)
    vecs = coords.astype(float) @ B
    norms = np.einsum("ij,ij->i", vecs, vecs)
    return math.sqrt(float(norms[np.any(coords != 0, axis=1)].min()))


def lattice_density(lat):
    """Packing density m(B(λ₁/2))/covol of the lattice packing."""
    lam = min_distance(lat)
    return ball_volume(Euclidean(lat.n), 0.5 * lam) / lat.covolume


def random_unimodular(n, rng, steps=12):
    """A random integer matrix with determinant ±1 built from elementary moves."""
    U = np.eye(n, dtype=np.int64)
    for _ in range(steps):
        i, j = rng.choice(n, 2, replace=False)
        U[i] += int(rng.integers(-2, 3)) * U[j]
        if rng.random() < 0.3:
            U[[i, j]] = U[[j, i]]
    return U


# -- Poisson chain -------------------------------------------------------

def _shell_tail(lat, T, g):
    """Bound Σ_{|γ|>T} g(|γ|) for decreasing g via cells of diameter d."""
    B, _ = lll_reduce(lat.basis)
    d = float(np.linalg.norm(B, axis=1).sum())
    n = lat.n
    lo = max(T - d, 0.0)
    val, _ = integrate.quad(lambda rho: g(max(rho - d, 0.0)) * rho ** (n - 1), lo, np.inf,
                            epsabs=0.0, epsrel=1e-10, limit=400)
    return sphere_area(n) * val / lat.covolume


def _gauss_radius(A, kappa, target, n, floor):
    # a radius beyond which the Gaussian tail is well below target
    if A <= 0:
        return floor
    T = math.sqrt(max(math.log(max(A, 1e-300) / target), 1.0) / kappa) + floor
    return max(T, floor)


def _tail_sum(lat, A, kappa, target, floor):
    """Radius T and bound on Σ_{|γ|>T} A e^{-κ|γ|²}, at most ``target``."""
    B, _ = lll_reduce(lat.basis)
    d = float(np.linalg.norm(B, axis=1).sum())
    T = _gauss_radius(A, kappa, target, lat.n, floor) + d
    for _ in range(60):
        bound = _shell_tail(lat, T, lambda t: A * math.exp(-kappa * t * t))
        if bound <= target:
            return T, bound
        T *= 1.2
    raise TailBoundFailure(f"Gaussian tail bound {bound:.3e} stays above {target:.3e}")


def _tent_spectral_sum(lat, basis, coef, K=200000):
    """Σ over the 1-D dual lattice of the tent transform with a certified remainder.

    Each element contributes w·sinc²(wk/a) = (1 - cos(2πwk/a))/(2π²(w/a)²k²)·w for k ≠ 0;
    the 1/k² part is summed exactly through the trigamma function and the
    cosine part is bounded by Dirichlet summation by parts.
    """
    a = float(lat.basis[0, 0])
    ms = basis.geometry.measure_scale
    k = np.arange(1, K + 1, dtype=float)
    total = 0.0
    err = 0.0
    direct = []
    for c, w in zip(coef, basis.widths):
        if c == 0:
            continue
        u = w / abs(a)
        vals = w * np.sinc(u * k) ** 2
        direct.append(2.0 * ms * c * math.fsum(vals))
        frac = u - round(u)
        pref = 2.0 * ms * c * w / (2.0 * math.pi ** 2 * u * u)
        if abs(frac) < 1e-15:
            continue  # integer u: sin²(πuk) vanishes identically
        total += pref * float(special.polygamma(1, K + 1))
        err += abs(pref) / (abs(math.sin(math.pi * frac)) * (K + 1) ** 2)
    zero = float(basis.trivial_row() @ coef)
    return math.fsum(direct) + total + zero, err, zero


def poisson_chain_check(lat, f, r=None, fhat=None, fhat_envelope=None, rel=1e-13):
    """Both sides of Poisson summation and the density chain for witness ``f``.

    Parameters
    ----------
    lat : LatticeSpec
    f : RadialFunction
        Euclidean function of dimension ``lat.n``; basis-backed functions use
        closed-form transforms.
    r : float, optional
        Packing radius, default λ₁/2; used only to report whether f ≤ 0 on
        every nonzero lattice vector.
    fhat : callable, optional
        f̂(λ) in the geometry's normalization, for functions without a basis.
    fhat_envelope : (A, κ), optional
        |f̂(λ)| ≤ A·exp(-κλ²), required with ``fhat``.
    """
    geom = f.geometry
    if geom.kind != "euclidean" or geom.n != lat.n:
        raise DomainError("Poisson chain checks need a Euclidean function of the lattice dimension")
    c = geom.measure_scale
    inten = 1.0 / (c * lat.covolume)
    fe = float(f.value_at_identity())
    basis = f.basis
    coef = f.coefficients
    scale = max(abs(fe), 1e-300)
    target = rel * scale

    # spatial side
    env = f.envelope
    if env.compact:
        T_sp, sp_tail = max(env.radius, 0.0), 0.0
    else:
        T_sp, sp_tail = _tail_sum(lat, env.amplitude, env.decay, target, env.radius)
    _, norms = lattice_vectors(lat, T_sp)
    fvals = np.asarray(f(norms), dtype=float)
    spatial = math.fsum(fvals)
    nonzero = norms > 0
    off_max = float(fvals[nonzero].max()) if np.any(nonzero) else -math.inf

    # spectral side (λ = 2π|μ|)
    dual = lat.dual()
    if basis is not None and basis.family == "tent":
        spectral, sp_err, fhat_one = _tent_spectral_sum(lat, basis, coef)
        spec_count = None
        spec_tail = sp_err
        spec_arg = "trigamma_remainder"
    else:
        if basis is not None:
            from packlp.bases import _amplitude
            q = (np.asarray(coef) * basis._fourier_scale()) @ basis.profile.monomials
            A = float(_amplitude(q))
            kappa = 0.25 * basis.scale ** 2 / (2.0 * math.pi)
            F = lambda lam: basis.spectral_values("euclidean", lam) @ coef
            fhat_one = float(basis.trivial_row() @ coef)
        else:
            if fhat is None or fhat_envelope is None:
                raise DomainError("functions without a basis need fhat and fhat_envelope")
            A, kappa = fhat_envelope
            F = lambda lam: np.asarray(fhat(lam), dtype=float)
            fhat_one = float(F(np.zeros(1))[0])
        k_mu = kappa * (2.0 * math.pi) ** 2
        ftarget = rel * max(abs(fhat_one), 1e-300) / inten
        T_mu, spec_tail = _tail_sum(dual, A, k_mu, ftarget, 0.0)
        _, mu = lattice_vectors(dual, T_mu)
        spectral = math.fsum(np.asarray(F(2.0 * math.pi * mu), dtype=float))
        spec_count = int(mu.size)
        spec_arg = "gaussian_envelope"

    lhs = spatial  # Σ_Γ f(γ); the Haar scale enters only through the intensity
    rhs = inten * spectral  # (1/(c·covol)) Σ_{Γ*} F(2π|μ|)
    diff = abs(lhs - rhs)
    tol_eq = 1e-9 * max(abs(lhs), abs(rhs), abs(fe), 1e-300)
    chain = [inten * fe, inten * lhs, inten * rhs, inten ** 2 * fhat_one]
    slack = [chain[0] - chain[1], chain[2] - chain[3]]
    norm = max(abs(v) for v in chain)
    report = {
        "lattice": lat.name, "n": lat.n, "intensity": inten, "covolume": lat.covolume,
        "fe": fe, "fhat_one": fhat_one,
        "spatial_sum": lhs, "spectral_sum": rhs, "poisson_diff": diff,
        "spatial_terms": int(norms.size), "spatial_radius": T_sp, "spatial_tail": sp_tail,
        "spectral_terms": spec_count, "spectral_tail": spec_tail, "spectral_tail_argument": spec_arg,
        "chain": {"i_fe": chain[0], "eta_plus": chain[1], "eta_plus_spectral": chain[2],
                  "i2_fhat_one": chain[3]},
        "slack": {"spatial": slack[0] / norm, "spectral": slack[1] / norm},
        "max_off_origin": off_max,
    }
    report["poisson_ok"] = bool(diff <= tol_eq)
    report["chain_ok"] = bool(min(report["slack"].values()) >= -1e-10)
    report["equality"] = bool(max(abs(s) for s in report["slack"].values()) <= 1e-9)
    if r is not None:
        # far-tail values at the level of rounding (≪ 1e-12·f(e)) count as zero
        report["witness_nonpositive_off_origin"] = bool(off_max <= 1e-12 * scale) if 2 * r <= min_distance(lat) + 1e-12 else None
    return report


# -- finite point configurations ------------------------------------------

@dataclass
class PointConfig:
    """Finite point set on the unit sphere S^(d-1) or in R^d.

    ``separation`` is an angle on the sphere and a Euclidean distance otherwise.
    """

    points: np.ndarray
    separation: float
    space: str = "euclidean"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        P = np.asarray(self.points, dtype=float)
        if P.size == 0:
            P = P.reshape(0, max(P.shape[-1] if P.ndim == 2 else 0, 1))
        self.points = np.atleast_2d(P)
        if self.space not in ("euclidean", "sphere"):
            raise DomainError("space must be 'euclidean' or 'sphere'")
        if self.space == "sphere" and len(self.points):
            norms = np.linalg.norm(self.points, axis=1)
            if np.any(np.abs(norms - 1.0) > 1e-12):
                raise DomainError("sphere configurations need unit vectors")
        if not self.separation >= 0:
            raise DomainError("separation must be non-negative")
        m = self.min_separation()
        if m < self.separation * (1 - 1e-12):
            raise DomainError(f"points are {m:.6g} apart, below the declared separation {self.separation:.6g}")

    def __len__(self):
        return len(self.points)

    def distances(self, x=None):
        P = self.points
        if x is not None:
            x = np.asarray(x, dtype=float)
            if self.space == "sphere":
                return np.arccos(np.clip(P @ x / np.linalg.norm(x), -1.0, 1.0))
            return np.linalg.norm(P - x, axis=1)
        if self.space == "sphere":
            G = np.clip(P @ P.T, -1.0, 1.0)
            D = np.arccos(G)
        else:
            D = np.linalg.norm(P[:, None, :] - P[None, :, :], axis=2)
        return D[np.triu_indices(len(P), 1)]

    def min_separation(self):
        if len(self.points) < 2:
            return math.inf
        return float(self.distances().min())

    def geometry(self):
        d = self.points.shape[1]
        return Sphere(d - 1) if self.space == "sphere" else Euclidean(d)


def icosahedron():
    """The 12 vertices of the regular icosahedron as a spherical code."""
    g = 0.5 * (1.0 + math.sqrt(5.0))
    pts = []
    for a, b in itertools.product((-1.0, 1.0), repeat=2):
        pts += [(0.0, a, b * g), (a, b * g, 0.0), (b * g, 0.0, a)]
    P = np.array(pts) / math.sqrt(1.0 + g * g)
    return PointConfig(P, math.atan(2.0), "sphere", {"name": "icosahedron"})


def lattice_points_in_ball(lat, R, center=None):
    """Lattice points within distance R of ``center`` as a PointConfig."""
    center = np.zeros(lat.n) if center is None else np.asarray(center, dtype=float)
    shift = np.linalg.norm(center)
    vecs, _ = lattice_vectors(lat, R + shift)
    keep = np.linalg.norm(vecs - center, axis=1) <= R
    return PointConfig(vecs[keep], min_distance(lat), "euclidean", {"lattice": lat.name})


def packing_count_check(P, center, R, r=None):
    """#(P ∩ B(center, R)) against m(B(R + r))/m(B(r)), with r = separation/2."""
    r = 0.5 * P.separation if r is None else float(r)
    if not r > 0:
        raise DomainError("packing radius must be positive")
    if P.separation < 2 * r * (1 - 1e-12):
        raise DomainError("configuration separation is below 2r")
    geom = P.geometry() if len(P) else (Euclidean(len(np.atleast_1d(center))))
    count = int(np.sum(P.distances(center) <= R)) if len(P) else 0
    outer = R + r
    if geom.kind == "sphere":
        outer = min(outer, math.pi)
    bound = ball_volume(geom, outer) / ball_volume(geom, r)
    return {"count": count, "bound": bound, "holds": bool(count <= bound), "R": R, "r": r,
            "space": P.space}
