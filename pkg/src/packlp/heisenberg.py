"""Heat kernels on the Heisenberg group H_n as a witness basis.

The heat kernel at time σ is

    p_σ(t, s) = ∫ G_σ(λ, s) e^{iλt} dλ,
    G_σ(λ, s) = (λ / (2 sinh σλ))^n · exp(-(λ coth σλ) s²/4),

and its spherical transform depends on the point only through the energy
E = |λ|(2m+n) (type A) or E = τ² (type B):  p̂_σ = C·e^{-σE}, with
C = (2π)^(n+1).  A combination f = Σ c_k p_{σ_k} therefore has
f̂(E) = C Σ c_k e^{-σ_k E}.

The λ-integral is evaluated on a shifted contour Im λ = η ∈ [0, π/σ),
which turns the cancellation of e^{iλt} into the explicit factor
e^{-ηt}; η is chosen per point to minimize the bound e^{-ηt}∫|G_σ|.
"""
import math
from functools import lru_cache

import numpy as np
from scipy.optimize import minimize

from packlp.bases import Segment, TailReport, WitnessBasis, _envelope_tail, _shape_weight
from packlp.errors import DomainError, SpectrumMismatch
from packlp.geometry import Envelope, ck_norm, ck_polar
from packlp.quadrature import gauss_legendre, integrate
from packlp.spectra import SpectralGrid, SpectralPoint

_THETAS = np.array([0.0, 0.5, 0.8, 0.9, 0.95, 0.98, 0.99])
_GL = 24


def heat_constant(n):
    return (2.0 * math.pi) ** (n + 1)


@lru_cache(maxsize=16)
def _sinh_moment(n):
    # ∫_R (x / sinh x)^n dx
    f = lambda x: np.where(x == 0, 1.0, x / np.sinh(np.where(x == 0, 1.0, x))) ** n
    return 2.0 * float(integrate(f, 0.0, 60.0 + 10 * n, rtol=1e-15).value)


def heat_at_identity(n, sigma):
    """p_σ(0, 0) = (2σ)^(-n) σ^(-1) ∫ (x/sinh x)^n dx."""
    return _sinh_moment(n) / (2.0 ** n * sigma ** (n + 1))


def energy(point, n):
    """E(σ) with p̂_σ(point) = C e^{-σE}."""
    if point.kind == "heisenberg_a":
        return abs(point.value) * (2 * point.m + n)
    if point.kind == "heisenberg_b":
        return point.value ** 2
    raise SpectrumMismatch(f"{point.kind} is not a Heisenberg family")


def _G(n, sigma, lam, s2):
    # lam complex array (nodes, 1); s2 = s² array (1, points)
    z = sigma * lam
    small = np.abs(z) < 1e-8
    zs = np.where(small, 1.0, z)
    ratio = np.where(small, 1.0 / (2.0 * sigma), lam / (2.0 * np.sinh(zs)))
    lc = np.where(small, 1.0 / sigma, lam / np.tanh(zs))
    with np.errstate(over="ignore", under="ignore", invalid="ignore"):
        return ratio ** n * np.exp(-0.25 * lc * s2)


def _panels(sigma, theta, X, tmax):
    # graded near the contour's closest approach to the pole, capped for oscillation
    w0 = 0.25 * (math.sin(theta * math.pi) if theta > 0 else 1.0) / sigma
    cap = min(X / 8.0, 2.0 * math.pi / tmax if tmax > 0 else X / 8.0)
    edges = [0.0]
    w = min(w0, cap)
    while edges[-1] < X:
        edges.append(min(edges[-1] + w, X))
        w = min(w * 1.5, cap)
    return np.array(edges)


def _nodes(edges):
    x, w = gauss_legendre(_GL)
    lo, hi = edges[:-1], edges[1:]
    mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
    return (mid[:, None] + half[:, None] * x[None, :]).ravel(), (half[:, None] * w[None, :]).ravel()


def _extent_x(n, sigma, s2):
    return (45.0 + 3.0 * n) / (n * sigma + 0.25 * s2)


class HeatKernelBasis(WitnessBasis):
    """Heat kernels p_σ, σ = sigma_min·q^k, on the Heisenberg group H_n.

    Parameters
    ----------
    geometry : GeometryDescriptor
        ``Heisenberg(n)``.
    size : int
        Number of kernels.
    r : float
        Packing radius; default times scale with r² (dilation covariance).
    sigma_min, sigma_max : float, optional
        Time range (defaults 0.02·(2r)² and 2·(2r)²).
    """

    family = "heis_heat"
    margins = (1e-5, 1e-5)

    def __init__(self, geometry, size=8, r=0.5, sigma_min=None, sigma_max=None):
        if geometry.kind != "heisenberg":
            raise DomainError("HeatKernelBasis lives on the Heisenberg group")
        if size < 1:
            raise DomainError("need at least one kernel")
        self.geometry = geometry
        self.n = geometry.n
        self.size = int(size)
        self.r = float(r)
        d2 = (2.0 * r) ** 2
        lo = 0.02 * d2 if sigma_min is None else float(sigma_min)
        hi = 2.0 * d2 if sigma_max is None else float(sigma_max)
        if not 0 < lo <= hi:
            raise DomainError("need 0 < sigma_min <= sigma_max")
        self.sigmas = np.geomspace(lo, hi, self.size) if self.size > 1 else np.array([lo])
        self._mag = {}

    # -- kernel evaluation -------------------------------------------
    def _magnitude_table(self, k):
        """log of 2∫_0^∞|G_σ(x+iη, s)|dx on an s-grid, for each θ."""
        if k not in self._mag:
            sigma = self.sigmas[k]
            s_grid = np.linspace(0.0, 40.0 * math.sqrt(self.sigmas[-1]) + 10.0, 161)
            out = np.empty((_THETAS.size, s_grid.size))
            for j, th in enumerate(_THETAS):
                eta = th * math.pi / sigma
                X = _extent_x(self.n, sigma, 0.0)
                x, w = _nodes(_panels(sigma, th, X, 0.0))
                vals = np.abs(_G(self.n, sigma, (x + 1j * eta)[:, None], (s_grid ** 2)[None, :]))
                vals = np.where(np.isfinite(vals), vals, np.inf)
                with np.errstate(divide="ignore", over="ignore"):
                    out[j] = np.log(2.0 * (w[:, None] * vals).sum(axis=0))
            self._mag[k] = (s_grid, out)
        return self._mag[k]

    def _log_bounds(self, k, t, s):
        s_grid, table = self._magnitude_table(k)
        sigma = self.sigmas[k]
        logm = np.stack([np.interp(s, s_grid, row) for row in table])  # (θ, points)
        return logm - (_THETAS[:, None] * math.pi / sigma) * t[None, :]

    def kernel(self, k, t, s, skip_below=None):
        """p_{σ_k}(t, s) and an error estimate; entries whose bound lies
        below ``skip_below`` (log scale, per point) are returned as 0."""
        t = np.abs(np.atleast_1d(np.asarray(t, dtype=float)).ravel())
        s = np.atleast_1d(np.asarray(s, dtype=float)).ravel()
        sigma = self.sigmas[k]
        lb = self._log_bounds(k, t, s)
        choice = np.argmin(lb, axis=0)
        best = lb[choice, np.arange(t.size)]
        out = np.zeros(t.size)
        err = np.exp(best) * 1e-14
        live = np.isfinite(best)
        if skip_below is not None:
            live &= best >= skip_below
            err = np.where(live, err, np.exp(np.minimum(best, 700.0)))
        idx_all = np.nonzero(live)[0]
        if idx_all.size == 0:
            return out, err
        # bucket by θ choice and by t scale so panels suit each group
        tb = np.floor(np.log2(np.maximum(t[idx_all], 1e-3))).astype(int)
        keys = np.stack([choice[idx_all], tb], axis=1)
        for key in np.unique(keys, axis=0):
            sel = idx_all[(keys[:, 0] == key[0]) & (keys[:, 1] == key[1])]
            th = _THETAS[key[0]]
            eta = th * math.pi / sigma
            for c0 in range(0, sel.size, 512):
                idx = sel[c0:c0 + 512]
                X = _extent_x(self.n, sigma, float(np.min(s[idx]) ** 2))
                x, w = _nodes(_panels(sigma, th, X, float(t[idx].max())))
                lam = (x + 1j * eta)[:, None]
                g = _G(self.n, sigma, lam, (s[idx] ** 2)[None, :])
                phase = np.exp(1j * x[:, None] * t[idx][None, :])
                val = 2.0 * np.real((w[:, None] * g * phase).sum(axis=0))
                out[idx] = val * np.exp(-eta * t[idx])
        return out, err

    def values_ts(self, t, s):
        """Element values at (t, s), shape (len, size)."""
        t = np.abs(np.atleast_1d(np.asarray(t, dtype=float)).ravel())
        s = np.atleast_1d(np.asarray(s, dtype=float)).ravel()
        bounds = np.stack([self._log_bounds(k, t, s).min(axis=0) for k in range(self.size)])
        floor = bounds.max(axis=0) + math.log(1e-18)
        cols = [self.kernel(k, t, s, skip_below=floor)[0] for k in range(self.size)]
        return np.stack(cols, axis=1)

    def values_polar(self, pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        t, s = ck_polar(pts[:, 0], pts[:, 1])
        return self.values_ts(t, s)

    def values(self, t):
        # radial samples along the t = 0 direction (s = N)
        t = np.atleast_1d(np.asarray(t, dtype=float)).ravel()
        return self.values_ts(np.zeros_like(t), t)

    def value_at_identity(self):
        return np.array([heat_at_identity(self.n, sg) for sg in self.sigmas])

    def evaluator(self, coef):
        coef = np.asarray(coef, dtype=float)

        def ev(t, s):
            t = np.asarray(t, dtype=float)
            s = np.asarray(s, dtype=float)
            tb, sb = np.broadcast_arrays(t, s)
            return (self.values_ts(tb.ravel(), sb.ravel()) @ coef).reshape(tb.shape)

        return ev

    # -- spatial grids ----------------------------------------------
    def spatial_extent(self, r):
        # slowest decay is along s: p_σ(0, s) ~ e^{-s²/(4σ)}
        return max(2.0 * r * 1.5, math.sqrt(4.0 * self.sigmas[-1] * 37.0))

    def default_spatial_spacing(self, r):
        return 0.02 * 2.0 * r

    def angles(self, refinement=0):
        count = 24 * 2 ** refinement
        return np.linspace(0.0, 0.5 * math.pi, count + 1)

    def forbidden_points(self, r, h, T, extra=()):
        R = np.arange(2.0 * r, T + 1e-12, h)
        phi = self.angles(max(0, int(round(math.log2(max(0.02 * 2 * r / h, 1.0))))))
        RR, PP = np.meshgrid(R, phi, indexing="ij")
        pts = np.stack([RR.ravel(), PP.ravel()], axis=1)
        extra = [e for e in extra if np.ndim(e) == 1 and len(e) == 2]
        if extra:
            pts = np.vstack([pts, np.asarray(extra, dtype=float)])
        return pts

    def margin_weight(self, pts):
        return _shape_weight(self.values_polar(pts))

    def envelope(self, coef):
        coef = np.asarray(coef, dtype=float)
        kappa = 0.8 / (4.0 * self.sigmas[-1])
        T = self.spatial_extent(self.r) * 1.5
        R = np.linspace(0.0, T, 240)
        phi = np.linspace(0.0, 0.5 * math.pi, 13)
        RR, PP = np.meshgrid(R, phi, indexing="ij")
        t, s = ck_polar(RR.ravel(), PP.ravel())
        vals = np.abs(self.values_ts(t, s) @ coef).reshape(RR.shape).max(axis=1)
        ratio = vals / np.exp(-kappa * R * R)
        return Envelope(max(4.0 * float(ratio.max()), 1e-300), kappa, 0.0)

    # -- spectral side -----------------------------------------------
    def _energy_rows(self, E):
        E = np.atleast_1d(np.asarray(E, dtype=float))
        C = heat_constant(self.n) * self.geometry.measure_scale
        with np.errstate(under="ignore"):
            return C * np.exp(-np.outer(E, self.sigmas))

    def transform(self, points):
        self._check_points(points)
        return self._energy_rows([energy(p, self.n) for p in points])

    def spectral_values(self, kind, params):
        if kind != "energy":
            raise SpectrumMismatch("Heisenberg spectral segments are parametrized by energy")
        return self._energy_rows(params)

    def point(self, kind, value):
        return SpectralPoint("heisenberg_b", math.sqrt(max(float(value), 0.0)))

    def spectral_extent(self):
        return 37.0 / self.sigmas[0]

    def spectral_segments(self):
        return [Segment("energy", 0.0, self.spectral_extent())]

    def spectral_margin_weight(self, kind, params):
        E = np.array(params, dtype=float)
        return np.exp(-self.sigmas[0] * E) if kind in ("energy", None) else np.ones(E.shape)

    def point_margin_weight(self, pts):
        return np.exp(-self.sigmas[0] * np.array([energy(p, self.n) for p in pts]))

    def default_spectral_grid(self, refinement=0, count=4000, max_m=4):
        Emax = self.spectral_extent()
        tmax = math.sqrt(Emax)
        h = tmax / count / 2 ** refinement
        pts = [SpectralPoint("heisenberg_b", j * h) for j in range(int(round(tmax / h)) + 1)]
        lam_h = 8.0 * h * h * count / self.n
        lam_max = Emax / self.n
        lams = np.arange(1, int(lam_max / lam_h) + 1) * lam_h
        pts += [SpectralPoint("heisenberg_a", lam, m) for lam in lams for m in range(max_m + 1)]
        return SpectralGrid(self.geometry, tuple(pts), {"max_tau": tmax, "max_m": max_m,
                                                         "max_lambda": lam_max}, h)

    # -- certification hooks --------------------------------------------
    def w2_tail(self, coef):
        """Exponential-sum dominance: for E >= E*, the smallest-σ term outweighs the rest."""
        coef = np.asarray(coef, dtype=float)
        k0 = int(np.argmin(self.sigmas))
        c0 = coef[k0]
        if not c0 > 0:
            return TailReport("exp_sum_dominance", False, math.inf, 0.0,
                              f"coefficient of the smallest time is {c0:.3e}")
        others = [(abs(c), sg - self.sigmas[k0]) for c, sg, j in zip(coef, self.sigmas, range(self.size))
                  if j != k0 and c != 0]
        E = 0.0
        while sum(c * math.exp(-d * E) for c, d in others) > c0:
            E = max(2.0 * E, 1.0)
            if E > 1e12:
                return TailReport("exp_sum_dominance", False, math.inf)
        return TailReport("exp_sum_dominance", True, E, 0.0,
                          "c_min >= Σ|c_k| e^{-(σ_k-σ_min)E*}")

    def w1_tail(self, coef, r):
        return _envelope_tail(self.geometry, self.envelope(coef), coef, self, r)

    def w2_scan(self, coef, fhat_one, policy, lp_grid):
        from packlp.certify import _grid, scan_extreme

        tail = self.w2_tail(coef)
        hi = max(self.spectral_extent(), tail.radius if math.isfinite(tail.radius) else 0.0)
        # sample uniformly in sqrt(E), refined beyond the LP grid
        tmax = math.sqrt(hi)
        h_tau = (lp_grid.spacing if lp_grid is not None and lp_grid.spacing else tmax / 2000) / policy.spectral_refine
        taus = _grid(0.0, tmax, h_tau)
        extra = [energy(p, self.n) for p in (lp_grid.points if lp_grid is not None else ())]
        Es = np.unique(np.concatenate([taus ** 2, np.asarray(extra, dtype=float)]))
        fn = lambda E: self._energy_rows(E) @ coef
        vmin, emin, locs = scan_extreme(fn, Es, policy.polish, -1)
        report = {"segments": [{"kind": "energy", "lo": 0.0, "hi": hi, "count": int(Es.size),
                                "spacing_tau": h_tau, "min_value": vmin, "argmin": emin}],
                  "min_value": vmin, "argmin": {"kind": "energy", "value": emin},
                  "tail": tail.to_dict(), "exchange": [self.point("energy", e) for e in locs],
                  "grid": {"energy": {"hi": hi, "spacing_tau": h_tau, "count": int(Es.size)}}}
        ok = vmin >= -policy.w2_tol * fhat_one and tail.holds
        return ok, report, ["W2: one-parameter energy family covers both spectral series"]

    def w1_scan(self, coef, r, policy, lp_points):
        coef = np.asarray(coef, dtype=float)
        tail = self.w1_tail(coef, r)
        h = (policy.spatial_spacing or self.default_spatial_spacing(r)) / policy.spatial_refine
        T = max(self.spatial_extent(r), tail.radius)
        R = np.arange(2.0 * r, T + 1e-12, h)
        phi = self.angles(1)
        RR, PP = np.meshgrid(R, phi, indexing="ij")
        vals = (self.values_polar(np.stack([RR.ravel(), PP.ravel()], axis=1)) @ coef).reshape(RR.shape)
        order = np.argsort(-vals.ravel())[:policy.polish]
        best = float(vals.max())
        i, j = np.unravel_index(int(np.argmax(vals)), vals.shape)
        arg = (float(R[i]), float(phi[j]))
        locs = []
        fn = lambda p: -float((self.values_polar(np.array([p])) @ coef)[0])
        for flat in order:
            i, j = np.unravel_index(int(flat), vals.shape)
            x0 = np.array([R[i], phi[j]])
            bnds = [(max(2.0 * r, R[i] - h), min(T, R[i] + h)), (0.0, 0.5 * math.pi)]
            res = minimize(fn, x0, method="L-BFGS-B", bounds=bnds, options={"maxiter": 60})
            p = (float(res.x[0]), float(res.x[1]))
            locs.append(p)
            if -res.fun > best:
                best, arg = float(-res.fun), p
        fe = float(self.value_at_identity() @ coef)
        report = {"grid": {"lo": 2.0 * r, "hi": T, "spacing": h, "angles": int(phi.size),
                           "count": int(vals.size)},
                  "max_value": best, "argmax": arg, "tail": tail.to_dict(), "exchange": locs}
        ok = best <= 0.0 and tail.holds and tail.bound <= policy.tail_rel * abs(fe)
        assumptions = [f"W1: |f| <= {tail.bound:.3e} beyond N = {tail.radius:.6g} is treated as nonpositive",
                       "W1: f is even in t, so angles in [0, π/2] cover the forbidden region"]
        return ok, report, assumptions

    def to_dict(self):
        return {"family": self.family, "geometry": self.geometry.to_config(), "size": self.size,
                "r": self.r, "sigma_min": float(self.sigmas[0]), "sigma_max": float(self.sigmas[-1])}

    @classmethod
    def from_dict(cls, d):
        from packlp.geometry import from_config
        return cls(from_config(d["geometry"]), int(d["size"]), float(d["r"]),
                   float(d["sigma_min"]), float(d["sigma_max"]))
