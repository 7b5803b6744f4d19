"""The witness linear program.

Over coefficients x of a finite basis, minimize f(e) = c·x subject to
f̂(1) = 1, f̂(σ_k) >= ε₂·w(σ_k)·f̂(1) on a spectral grid and
f(t_i) + ε₁·w(t_i)·f(e) <= 0 on a grid of the forbidden region t >= 2r.
The margins are proportional to f(e) and f̂(1), so the program is invariant
under rescaling the basis or the Haar measure.
"""
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

from packlp.errors import DegenerateWitness, DomainError, GridError, SpectrumMismatch
from packlp.geometry import RadialFunction, ball_volume, bound_ratio, sphere_area
from packlp.spectra import SpectralGrid, parallel_map, trivial_point

log = logging.getLogger(__name__)

RESIDUAL_TOL = 1e-9


@dataclass
class SpatialGrid:
    """Sample radii of the forbidden region [2r, extent] (CK-polar pairs on the Heisenberg group)."""

    r: float
    points: np.ndarray
    spacing: float
    extent: float

    def __len__(self):
        return len(self.points)

    def to_dict(self):
        return {"r": self.r, "spacing": self.spacing, "extent": self.extent, "count": len(self.points)}


def make_spatial_grid(basis, r, spacing=None, extent=None, refinement=0, extra=()):
    """Uniform forbidden-region grid; halving ``spacing`` gives a superset."""
    if not r > 0:
        raise DomainError("packing radius must be positive")
    h = basis.default_spatial_spacing(r) if spacing is None else float(spacing)
    h = h / 2 ** refinement
    T = basis.spatial_extent(r) if extent is None else float(extent)
    if hasattr(basis, "forbidden_points"):
        pts = basis.forbidden_points(r, h, T, extra)
        return SpatialGrid(r, pts, h, T)
    lo = 2.0 * r
    if T < lo:
        raise GridError("spatial extent lies inside the packing radius")
    count = int(math.floor((T - lo) / h + 1e-9))
    pts = lo + h * np.arange(count + 1)
    extra = np.asarray([e for e in np.atleast_1d(np.asarray(extra, dtype=float)) if lo <= e <= T])
    pts = np.unique(np.concatenate([pts, extra]))
    return SpatialGrid(r, pts, h, T)


@dataclass
class LPInstance:
    """min c·x  s.t.  A_eq x = b_eq,  A_ub x <= b_ub,  bounds."""

    c: np.ndarray
    A_eq: np.ndarray
    b_eq: np.ndarray
    A_ub: np.ndarray
    b_ub: np.ndarray
    bounds: list = None
    metadata: dict = field(default_factory=dict)

    @property
    def size(self):
        return self.c.size


@dataclass
class LPSolution:
    coefficients: np.ndarray
    objective: float
    status: str
    residual: float = math.nan
    duals: np.ndarray = None
    message: str = ""

    @property
    def optimal(self):
        return self.status == "optimal"


def _normalize_rows(A, b):
    scale = np.abs(A).max(axis=1)
    keep = scale > 0
    # rows that vanish identically constrain nothing when b >= 0
    if np.any(~keep & (b < 0)):
        raise DomainError("an identically zero row has a negative right-hand side")
    return A[keep] / scale[keep, None], b[keep] / scale[keep]


def build_lp(geom, r, basis, spectral_grid, spatial_grid=None, margins=None):
    """Assemble the witness LP for ``basis`` on ``geom``.

    Parameters
    ----------
    geom : GeometryDescriptor
    r : float
        Packing radius; the forbidden region is t >= 2r.
    basis : WitnessBasis
    spectral_grid : SpectralGrid
    spatial_grid : SpatialGrid, optional
        Defaults to :func:`make_spatial_grid`.
    margins : (float, float), optional
        Relative (W1, W2) margins; defaults to ``basis.margins``.
    """
    if basis.geometry != geom:
        raise SpectrumMismatch("basis and geometry disagree")
    if spectral_grid.geometry != geom:
        raise SpectrumMismatch("spectral grid and geometry disagree")
    if geom.kind == "sphere" and 2 * r >= math.pi:
        raise DomainError("on the sphere 2r must be below π")
    triv = trivial_point(geom)
    if triv not in spectral_grid.points:
        raise GridError("spectral grid lacks the trivial character")
    if geom.kind == "hyperbolic" and not any(p.kind == "hyperbolic_imag" for p in spectral_grid.points):
        raise GridError("hyperbolic grids need imaginary-segment samples")
    if geom.kind == "heisenberg":
        kinds = {p.kind for p in spectral_grid.points}
        if not {"heisenberg_a", "heisenberg_b"} <= kinds:
            raise GridError("Heisenberg grids need both spectral families")
    if spatial_grid is None:
        spatial_grid = make_spatial_grid(basis, r)
    need = basis.spatial_extent(r)
    if spatial_grid.extent < need * (1 - 1e-12):
        raise GridError(f"spatial grid ends at {spatial_grid.extent:.4g} before the truncation radius {need:.4g}")
    eps1, eps2 = basis.margins if margins is None else margins

    c = np.asarray(basis.value_at_identity(), dtype=float)
    a_eq = np.asarray(basis.trivial_row(), dtype=float)
    pts = list(spectral_grid.points)
    chunks = [pts[i:i + 256] for i in range(0, len(pts), 256)]
    spec = np.vstack(parallel_map(basis.transform, chunks))
    spec_w = _spectral_weights(basis, pts)
    A_spec = -spec + eps2 * spec_w[:, None] * a_eq[None, :]
    sp_pts = spatial_grid.points
    sp = basis.values(sp_pts) if not hasattr(basis, "forbidden_points") else basis.values_polar(sp_pts)
    sp_w = basis.margin_weight(sp_pts)
    A_sp = sp + eps1 * sp_w[:, None] * c[None, :]
    A_ub = np.vstack([A_spec, A_sp])
    b_ub = np.zeros(A_ub.shape[0])
    A_ub, b_ub = _normalize_rows(A_ub, b_ub)
    eq_scale = np.abs(a_eq).max()
    if not eq_scale > 0:
        raise DegenerateWitness("every basis element has zero integral")
    meta = {"geometry": geom.to_config(), "r": r, "basis": basis.to_dict(),
            "spectral_points": len(pts), "spatial_points": len(spatial_grid),
            "spatial": spatial_grid.to_dict(), "spectral": {"spacing": spectral_grid.spacing,
                                                             "bounds": dict(spectral_grid.bounds)},
            "margins": [eps1, eps2], "eq_scale": eq_scale}
    return LPInstance(c=c, A_eq=(a_eq / eq_scale)[None, :], b_eq=np.array([1.0 / eq_scale]),
                      A_ub=A_ub, b_ub=b_ub, bounds=basis.coefficient_bounds, metadata=meta)


def _spectral_weights(basis, pts):
    if hasattr(basis, "point_margin_weight"):
        return basis.point_margin_weight(pts)
    w = np.ones(len(pts))
    kinds = {p.kind for p in pts}
    for kind in kinds:
        idx = [i for i, p in enumerate(pts) if p.kind == kind]
        w[idx] = basis.spectral_margin_weight(kind, np.array([pts[i].value for i in idx]))
    return w


_STATUS = {0: "optimal", 1: "stalled", 2: "infeasible", 3: "unbounded", 4: "stalled"}


def solve_lp(lp):
    """Solve with the HiGHS dual simplex; deterministic for a given instance."""
    n = lp.size
    bounds = lp.bounds if lp.bounds is not None else [(None, None)] * n
    if lp.A_ub.shape[0] == 0 and all(b == (None, None) for b in bounds):
        return _solve_equality_only(lp)
    c, A_eq, b_eq, A_ub, b_ub, bounds, col = _equilibrate(lp, bounds)
    res = linprog(c, A_ub=A_ub if A_ub.size else None, b_ub=b_ub if A_ub.size else None,
                  A_eq=A_eq, b_eq=b_eq, bounds=bounds, method="highs-ds",
                  options={"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10,
                           "presolve": True})
    status = _STATUS.get(res.status, "stalled")
    if res.x is None:
        return LPSolution(np.full(n, np.nan), math.nan, status, message=res.message)
    x = np.asarray(res.x, dtype=float) / col
    resid = lp_residual(lp, x)
    if status == "optimal" and resid > RESIDUAL_TOL:
        status = "stalled"
    duals = None
    if getattr(res, "ineqlin", None) is not None:
        duals = np.asarray(res.ineqlin.marginals)
    return LPSolution(x, float(lp.c @ x), status, resid, duals, res.message)


def _equilibrate(lp, bounds):
    # column scaling, then row scaling: rescaling basis elements leaves the solved instance unchanged
    mags = [np.abs(lp.c), np.abs(lp.A_eq).max(axis=0)]
    if lp.A_ub.size:
        mags.append(np.abs(lp.A_ub).max(axis=0))
    col = np.max(mags, axis=0)
    col = np.where(col > 0, col, 1.0)
    A_eq = lp.A_eq / col
    eq = np.abs(A_eq).max(axis=1)
    eq = np.where(eq > 0, eq, 1.0)
    A_eq, b_eq = A_eq / eq[:, None], lp.b_eq / eq
    A_ub, b_ub = lp.A_ub / col, lp.b_ub
    if A_ub.size:
        A_ub, b_ub = _normalize_rows(A_ub, b_ub)
    # a single normalization row gets right-hand side 1, so the solved instance
    # does not depend on the overall scale of the transform (the Haar constant)
    if b_eq.size == 1 and b_eq[0] != 0:
        beta = abs(float(b_eq[0]))
        b_eq, b_ub, col = b_eq / beta, b_ub / beta, col / beta
    scaled = [(None if lo is None else lo * s, None if hi is None else hi * s) for (lo, hi), s in zip(bounds, col)]
    return lp.c / col, A_eq, b_eq, A_ub, b_ub, scaled, col


def _solve_equality_only(lp):
    a = lp.A_eq[0]
    if lp.size == 1:
        if a[0] == 0:
            return LPSolution(np.array([math.nan]), math.nan, "infeasible")
        x = np.array([lp.b_eq[0] / a[0]])
        return LPSolution(x, float(lp.c @ x), "optimal", lp_residual(lp, x))
    # c must be parallel to a, otherwise the objective is unbounded
    k = int(np.argmax(np.abs(a)))
    ratio = lp.c[k] / a[k]
    if np.allclose(lp.c, ratio * a, rtol=1e-12, atol=1e-15):
        x = np.zeros(lp.size)
        x[k] = lp.b_eq[0] / a[k]
        return LPSolution(x, float(lp.c @ x), "optimal", lp_residual(lp, x))
    return LPSolution(np.full(lp.size, np.nan), -math.inf, "unbounded")


def lp_residual(lp, x):
    """Largest scaled constraint violation."""
    r = [np.abs(lp.A_eq @ x - lp.b_eq).max() / max(1.0, np.abs(lp.b_eq).max())]
    if lp.A_ub.size:
        r.append(max(0.0, float((lp.A_ub @ x - lp.b_ub).max())) / max(1.0, float(np.abs(x).max())))
    for (lo, hi), xi in zip(lp.bounds or [], x):
        if lo is not None:
            r.append(max(0.0, lo - xi))
        if hi is not None:
            r.append(max(0.0, xi - hi))
    return float(max(r))


def bound_from_witness(geom, r, f, certified=True):
    """Density bound m(B(r))·f(e)/f̂(1) for a witness f.

    Returns a dict with ``bound``, ``fe``, ``fhat_one``, ``ball_volume`` and
    ``certified``; on the sphere also the code-size bound m(S^n)·f(e)/f̂(1).
    """
    from packlp.geometry import trivial_transform

    fe = f.value_at_identity()
    if f.basis is not None:
        fhat_one = float(f.basis.trivial_row() @ f.coefficients)
    else:
        fhat_one = trivial_transform(geom, f)
    bound = bound_ratio(geom, r, fe, fhat_one)
    out = {"bound": bound, "fe": fe, "fhat_one": fhat_one, "ball_volume": ball_volume(geom, r),
           "certified": bool(certified)}
    if geom.kind == "sphere":
        out["code_bound"] = geom.measure_scale * sphere_area(geom.n + 1) * fe / fhat_one
    return out


def lp_bound(geom, r, basis, spectral_grid=None, spatial_grid=None, margins=None):
    """Build and solve the LP; returns (LPSolution, bound or nan, LPInstance)."""
    grid = basis.default_spectral_grid() if spectral_grid is None else spectral_grid
    lp = build_lp(geom, r, basis, grid, spatial_grid, margins)
    sol = solve_lp(lp)
    bound = ball_volume(geom, r) * sol.objective if sol.optimal else math.nan
    return sol, bound, lp


def delsarte_code_bound(n, theta, max_degree, spacing=None, margins=(0.0, 0.0), refine=True):
    """Delsarte-type bound on the size of a code on S^n with minimal angle θ.

    The forbidden region is the cap t >= θ (2r = θ).  With ``refine`` the
    spatial grid is augmented by the exact maxima of each solution until
    the polynomial is nonpositive on the whole cap.  Returns ``inf`` when no
    degree-``max_degree`` witness exists.
    """
    from packlp.bases import SphereHarmonicBasis
    from packlp.geometry import Sphere

    if not 0 < theta:
        raise DomainError("minimal angle must be positive")
    if max_degree < 1:
        raise DomainError("need max_degree >= 1")
    geom = Sphere(n)
    if theta >= math.pi:
        # only single points; the constant function is a witness
        return 1.0
    basis = SphereHarmonicBasis(geom, max_degree)
    r = 0.5 * theta
    grid = basis.default_spectral_grid()
    extra = []
    best = math.inf
    for _ in range(8 if refine else 1):
        sg = make_spatial_grid(basis, r, spacing, extra=extra)
        lp = build_lp(geom, r, basis, grid, sg, margins)
        sol = solve_lp(lp)
        if sol.status == "infeasible":
            # no polynomial of this degree is nonpositive on the cap
            return math.inf
        if not sol.optimal:
            raise DegenerateWitness(f"Delsarte LP ended with status {sol.status}")
        value = basis.volume * sol.objective
        best = value
        fmax, tmax = basis.forbidden_maximum(sol.coefficients, r)
        if fmax <= 1e-12 * abs(sol.objective) or not refine:
            break
        extra.append(tmax)
    return best
