"""A posteriori witness certification and the LP/certify refinement loop.

A certificate is high-confidence floating point, not interval arithmetic:
(W1) is checked on a grid refined beyond the LP grid with local maxima
polished by bounded scalar search, plus a tail argument; (W2) likewise on
the spectral side, plus strict positivity of f̂(1).
"""
import json
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from packlp.errors import BudgetExhausted, DegenerateWitness, DomainError
from packlp.geometry import RadialFunction, ball_volume, from_config, trivial_transform
from packlp.spectra import SpectralGrid, SpectralPoint, transform_on_grid, uniform_grid

log = logging.getLogger(__name__)


@dataclass
class CertifyPolicy:
    """Tolerances and grid factors of the certifier.

    ``w2_tol`` is relative to f̂(1); ``tail_rel`` and ``recheck_tol`` are
    relative to |f(e)|.  (W1) has no tolerance: any positive value rejects.
    """

    spatial_refine: int = 4
    spectral_refine: int = 4
    w2_tol: float = 1e-12
    fhat_min: float = 1e-9
    tail_rel: float = 1e-13
    recheck_points: int = 2000
    recheck_tol: float = 1e-10
    seed: int = 20240611
    polish: int = 24
    spatial_spacing: float = None
    spectral_spacing: float = None

    def __post_init__(self):
        for name in ("w2_tol", "fhat_min", "tail_rel", "recheck_tol"):
            if not getattr(self, name) > 0:
                raise DomainError(f"{name} must be positive")
        if self.spatial_refine < 1 or self.spectral_refine < 1:
            raise DomainError("refinement factors must be at least 1")

    def to_dict(self):
        return dict(self.__dict__)


@dataclass
class WitnessCertificate:
    geometry: object
    r: float
    function: RadialFunction
    fe: float
    fhat_one: float
    w1_report: dict
    w2_report: dict
    verdict: str
    reason: str = ""
    bound: float = math.nan
    assumptions: list = field(default_factory=list)
    policy: dict = field(default_factory=dict)

    @property
    def certified(self):
        return self.verdict == "certified"

    @property
    def w1_margin(self):
        return -self.w1_report.get("max_value", math.inf) / max(abs(self.fe), 1e-300)

    @property
    def w2_margin(self):
        if not self.fhat_one > 0:
            return -math.inf
        return self.w2_report.get("min_value", -math.inf) / self.fhat_one

    def to_dict(self):
        f = self.function
        basis = f.basis.to_dict() if f.basis is not None else None
        return {
            "geometry": self.geometry.to_config(),
            "r": self.r,
            "basis": basis,
            "coefficients": [float(c) for c in f.coefficients],
            "bound": _num(self.bound),
            "fe": self.fe,
            "fhat_one": self.fhat_one,
            "ball_volume": ball_volume(self.geometry, self.r),
            "certification": {
                "w1_margin": _num(self.w1_margin),
                "w2_margin": _num(self.w2_margin),
                "grids": {"w1": self.w1_report.get("grid", {}), "w2": self.w2_report.get("grid", {})},
                "w1_report": _clean(self.w1_report),
                "w2_report": _clean(self.w2_report),
                "assumptions": list(self.assumptions),
                "policy": dict(self.policy),
            },
            "status": self.verdict,
            "reason": self.reason,
        }

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), sort_keys=True, **kw)


def _num(x):
    x = float(x)
    return x if math.isfinite(x) else None


def _clean(d):
    out = {}
    for k, v in d.items():
        if k == "exchange":
            continue
        if isinstance(v, dict):
            out[k] = _clean(v)
        elif isinstance(v, (np.floating, float)):
            out[k] = _num(v)
        elif isinstance(v, np.ndarray):
            out[k] = [_num(x) for x in v.ravel()]
        elif isinstance(v, (list, tuple)):
            out[k] = [_num(x) if isinstance(x, (float, np.floating)) else x for x in v]
        else:
            out[k] = v
    return out


def certificate_from_dict(d):
    """Rebuild the witness of a serialized certificate (the verdict is recomputed by the caller)."""
    from packlp.bases import basis_from_dict

    if d.get("basis") is None:
        raise DomainError("certificate has no basis; cannot rebuild the witness")
    basis = basis_from_dict(d["basis"])
    geom = from_config(d["geometry"])
    if basis.geometry != geom:
        raise DomainError("certificate geometry and basis disagree")
    f = RadialFunction.from_basis(basis, np.asarray(d["coefficients"], dtype=float))
    return geom, float(d["r"]), f


def policy_from_dict(d):
    """The CertifyPolicy recorded in a certificate dict (defaults when absent)."""
    stored = d.get("certification", {}).get("policy") or {}
    known = CertifyPolicy.__dataclass_fields__
    return CertifyPolicy(**{k: v for k, v in stored.items() if k in known})


# -- scanning helpers ----------------------------------------------------

def _grid(lo, hi, h, extra=()):
    if hi <= lo:
        return np.array([lo])
    count = max(1, int(math.ceil((hi - lo) / h)))
    xs = np.linspace(lo, hi, count + 1)
    extra = np.asarray([e for e in np.atleast_1d(np.asarray(extra, dtype=float)) if lo <= e <= hi])
    return np.unique(np.concatenate([xs, extra]))


def scan_extreme(fn, xs, polish=24, sign=+1):
    """Largest value of sign·fn over the sorted samples ``xs`` with polished local maxima.

    Returns (value, location, local-extremum locations); ``value`` is in the
    original sign convention.
    """
    v = sign * np.asarray(fn(xs), dtype=float)
    if xs.size == 1:
        return sign * float(v[0]), float(xs[0]), [float(xs[0])]
    pad = np.concatenate([[-np.inf], v, [-np.inf]])
    is_max = (pad[1:-1] >= pad[:-2]) & (pad[1:-1] >= pad[2:])
    idx = np.nonzero(is_max)[0]
    idx = idx[np.argsort(-v[idx], kind="stable")][:polish]
    best_v = float(v.max())
    best_x = float(xs[int(np.argmax(v))])
    locs = []
    for i in idx:
        lo = xs[max(i - 1, 0)]
        hi = xs[min(i + 1, xs.size - 1)]
        x, val = float(xs[i]), float(v[i])
        if hi > lo:
            res = minimize_scalar(lambda z: -sign * float(np.asarray(fn(np.array([z])))[0]),
                                  bounds=(lo, hi), method="bounded",
                                  options={"xatol": 1e-12 * max(1.0, abs(hi))})
            if -res.fun > val:
                x, val = float(res.x), float(-res.fun)
        locs.append(x)
        if val > best_v:
            best_v, best_x = val, x
    return sign * best_v, best_x, locs


# -- (W1) ----------------------------------------------------------------

def _w1_basis(geom, r, f, policy, lp_points):
    basis = f.basis
    coef = f.coefficients
    fe = f.value_at_identity()
    if hasattr(basis, "w1_scan"):
        return basis.w1_scan(coef, r, policy, lp_points)
    h0 = policy.spatial_spacing or basis.default_spatial_spacing(r)
    h = h0 / policy.spatial_refine
    extent = basis.spatial_extent(r)
    tail = basis.w1_tail(coef, r)
    assumptions = []
    if tail.argument == "polynomial_root_bound":
        if not (tail.holds and tail.radius <= 4.0 * extent):
            from packlp.bases import _envelope_tail
            tail = _envelope_tail(geom, f.envelope, coef, basis, r, policy.tail_rel)
        hi = max(extent, tail.radius)
    elif tail.argument == "envelope_negligible":
        hi = max(extent, tail.radius)
    else:
        hi = extent
    if tail.argument == "envelope_negligible":
        assumptions.append(f"W1: |f| <= {tail.bound:.3e} beyond t = {tail.radius:.6g} is treated as nonpositive")
    lo = 2.0 * r
    if geom.kind == "sphere":
        hi = math.pi
    xs = _grid(lo, hi, h, lp_points)
    fn = lambda t: basis.values(t) @ coef
    vmax, xmax, locs = scan_extreme(fn, xs, policy.polish, +1)
    if geom.kind == "sphere" and hasattr(basis, "forbidden_maximum"):
        emax, ex = basis.forbidden_maximum(coef, r)
        if emax > vmax:
            vmax, xmax = emax, ex
        locs.append(ex)
    report = {"grid": {"lo": lo, "hi": hi, "spacing": h, "count": int(xs.size)},
              "max_value": vmax, "argmax": xmax, "tail": tail.to_dict(), "exchange": locs}
    ok = vmax <= 0.0 and tail.holds
    if tail.argument == "envelope_negligible" and tail.bound > policy.tail_rel * abs(fe):
        ok = False
    return ok, report, assumptions


def _w1_generic(geom, r, f, policy, lp_points):
    env = f.envelope
    fe = f.value_at_identity()
    lo = 2.0 * r
    assumptions = []
    if geom.kind == "sphere":
        hi, tail = math.pi, {"argument": "compact_space", "holds": True, "radius": math.pi, "bound": 0.0}
    elif env.compact:
        hi = max(env.radius, lo)
        tail = {"argument": "compact_support", "holds": True, "radius": env.radius, "bound": 0.0}
    else:
        T = max(env.radius, lo)
        target = policy.tail_rel * max(abs(fe), 1e-300)
        while float(env.bound(geom, np.array([T]))[0]) > target:
            T *= 1.05
        b = float(env.bound(geom, np.array([T]))[0])
        hi = T
        tail = {"argument": "envelope_negligible", "holds": True, "radius": T, "bound": b}
        assumptions.append(f"W1: |f| <= {b:.3e} beyond t = {T:.6g} is treated as nonpositive")
    h = (policy.spatial_spacing or 0.005 * 2 * r) / policy.spatial_refine
    pts = list(lp_points) + [p for p in f.breakpoints if lo <= p <= hi]
    xs = _grid(lo, hi, h, pts)
    fn = lambda t: np.asarray(f(t), dtype=float)
    vmax, xmax, locs = scan_extreme(fn, xs, policy.polish, +1)
    report = {"grid": {"lo": lo, "hi": hi, "spacing": h, "count": int(xs.size)},
              "max_value": vmax, "argmax": xmax, "tail": tail, "exchange": locs}
    return vmax <= 0.0, report, assumptions


# -- (W2) ----------------------------------------------------------------

def _w2_basis(geom, f, fhat_one, policy, lp_grid):
    basis = f.basis
    coef = f.coefficients
    if hasattr(basis, "w2_scan"):
        return basis.w2_scan(coef, fhat_one, policy, lp_grid)
    tail = basis.w2_tail(coef)
    assumptions = []
    lp_pts = lp_grid.points if lp_grid is not None else basis.default_spectral_grid().points
    default = basis.default_spectral_grid()
    report = {"segments": [], "tail": tail.to_dict(), "exchange": []}
    vmin = math.inf
    where = None
    for seg in basis.spectral_segments():
        extra = [p.value for p in lp_pts if p.kind == seg.kind]
        fn = lambda x, kind=seg.kind: basis.spectral_values(kind, x) @ coef
        if seg.discrete:
            xs = np.arange(int(seg.lo), int(seg.hi) + 1, dtype=float)
            vals = fn(xs)
            i = int(np.argmin(vals))
            smin, sx, locs = float(vals[i]), float(xs[i]), []
            h = 1.0
        else:
            hi = seg.hi
            if seg.kind in ("euclidean", "hyperbolic_real") and tail.argument == "polynomial_root_bound":
                if tail.holds and math.isfinite(tail.radius) and tail.radius <= 4.0 * seg.hi:
                    hi = max(hi, tail.radius)
                else:
                    tail = _spectral_envelope_tail(basis, coef, seg, fhat_one, policy)
                    hi = max(hi, tail.radius)
            if seg.kind == "hyperbolic_imag":
                J = default.bounds.get("imag_points", 16)
                h = (seg.hi - seg.lo) / (J * policy.spectral_refine)
            else:
                h0 = policy.spectral_spacing or default.spacing or (hi - seg.lo) / 1200.0
                h = h0 / policy.spectral_refine
            xs = _grid(seg.lo, hi, h, extra)
            smin, sx, locs = scan_extreme(fn, xs, policy.polish, -1)
        report["segments"].append({"kind": seg.kind, "lo": seg.lo, "hi": float(xs[-1]), "spacing": h,
                                   "count": int(xs.size), "min_value": smin, "argmin": sx})
        report["exchange"] += [basis.point(seg.kind, x) for x in locs if not (seg.kind == "hyperbolic_imag" and x <= 0)]
        if seg.kind == "hyperbolic_imag":
            report["imag_min"] = smin
            assumptions.append("W2: positivity between imaginary-segment samples is assumed from sampling density")
        if smin < vmin:
            vmin, where = smin, {"kind": seg.kind, "value": sx}
    report["tail"] = tail.to_dict()
    if tail.argument == "envelope_negligible":
        assumptions.append(f"W2: |f̂| <= {tail.bound:.3e} beyond {tail.radius:.6g}")
    report["min_value"] = vmin
    report["argmin"] = where
    report["grid"] = {s["kind"]: {"hi": s["hi"], "spacing": s["spacing"], "count": s["count"]}
                      for s in report["segments"]}
    ok = vmin >= -policy.w2_tol * fhat_one and tail.holds
    if tail.argument == "envelope_negligible" and tail.bound > policy.w2_tol * fhat_one:
        ok = False
    return ok, report, assumptions


def _spectral_envelope_tail(basis, coef, seg, fhat_one, policy):
    from packlp.bases import TailReport, _amplitude

    prof = basis.profile
    q = (np.asarray(coef) * basis._fourier_scale()) @ prof.monomials
    amp = float(_amplitude(q))
    g = basis.scale ** 2 / (2.0 * math.pi)
    target = policy.tail_rel * fhat_one
    # amp·exp(-g λ²/4) <= target
    lam = math.sqrt(max(4.0 * math.log(max(amp, 1e-300) / target) / g, 0.0))
    lam = max(lam, seg.hi)
    bound = amp * math.exp(-0.25 * g * lam * lam)
    return TailReport("envelope_negligible", True, lam, bound, "analytic transform envelope")


def _w2_generic(geom, f, fhat_one, policy, lp_grid):
    grid = lp_grid
    if grid is None:
        if geom.kind == "sphere":
            grid = uniform_grid(geom, max_degree=40)
        elif geom.kind == "heisenberg":
            raise DomainError("Heisenberg functions without a basis need an explicit spectral grid")
        else:
            grid = uniform_grid(geom, 40.0, 0.1)
    vals = transform_on_grid(geom, f, grid, method="quadrature")
    i = int(np.argmin(vals))
    report = {"grid": {"points": len(grid), "spacing": grid.spacing, "bounds": dict(grid.bounds)},
              "min_value": float(vals[i]), "argmin": grid.points[i].to_dict(),
              "tail": {"argument": "sampled_only", "holds": True}, "exchange": []}
    if geom.kind == "hyperbolic":
        imag = [v for p, v in zip(grid.points, vals) if p.kind == "hyperbolic_imag"]
        report["imag_min"] = float(min(imag)) if imag else None
    ok = float(vals[i]) >= -policy.w2_tol * fhat_one
    return ok, report, ["W2: transform sampled on the supplied grid only"]


# -- driver --------------------------------------------------------------

def certify_witness(geom, r, f, policy=None, spectral_grid=None, spatial_points=()):
    """Check (W1), (W2) and f̂(1) > 0 for ``f`` at packing radius ``r``.

    ``spectral_grid`` and ``spatial_points`` (the LP grids, when known) are
    always part of the check sets.  Rejection is a verdict, never an error.
    """
    policy = policy or CertifyPolicy()
    if f.geometry.kind != geom.kind or f.geometry.n != geom.n:
        raise DomainError("function and geometry disagree")
    fe = float(f.value_at_identity())
    try:
        if f.basis is not None:
            fhat_one = float(f.basis.trivial_row() @ f.coefficients)
        else:
            fhat_one = float(trivial_transform(geom, f))
    except Exception as exc:  # noqa: BLE001 - recorded in the verdict
        fhat_one = math.nan
        log.warning("trivial transform failed: %s", exc)
    if f.basis is not None:
        ok1, w1, a1 = _w1_basis(geom, r, f, policy, spatial_points)
        ok2, w2, a2 = _w2_basis(geom, f, fhat_one, policy, spectral_grid)
    else:
        ok1, w1, a1 = _w1_generic(geom, r, f, policy, spatial_points)
        ok2, w2, a2 = _w2_generic(geom, f, fhat_one, policy, spectral_grid)
    reason = ""
    if not ok1:
        reason = f"W1: max f = {w1['max_value']:.3e} at {_fmt(w1['argmax'])} on the forbidden region"
        if not w1.get("tail", {}).get("holds", True):
            reason = f"W1: tail argument {w1['tail']['argument']} fails"
    elif not (fhat_one >= policy.fhat_min):
        reason = f"W2: f̂(1) = {fhat_one:.3e} is not positive"
    elif not ok2:
        reason = f"W2: min f̂ = {w2['min_value']:.3e} at {w2.get('argmin')}"
        if not w2.get("tail", {}).get("holds", True):
            reason = f"W2: tail argument {w2['tail']['argument']} fails"
    assumptions = a1 + a2
    verdict = "certified" if not reason else "rejected"
    if verdict == "certified":
        worst = _random_recheck(geom, r, f, policy, w1)
        w1["random_recheck"] = {"seed": policy.seed, "points": policy.recheck_points, "max_value": worst}
        if worst > policy.recheck_tol * abs(fe):
            verdict = "rejected"
            reason = f"W1: random recheck found f = {worst:.3e}"
    bound = math.nan
    if verdict == "certified":
        try:
            bound = ball_volume(geom, r) * fe / fhat_one
        except DegenerateWitness:
            pass
    return WitnessCertificate(geom, float(r), f, fe, fhat_one, w1, w2, verdict, reason, bound, assumptions,
                              policy.to_dict())


def _fmt(x):
    if isinstance(x, (tuple, list)):
        return "(" + ", ".join(f"{v:.6g}" for v in x) + ")"
    return f"{x:.6g}"


def _random_recheck(geom, r, f, policy, w1):
    rng = np.random.default_rng(policy.seed)
    g = w1["grid"]
    if geom.kind == "heisenberg":
        R = rng.uniform(g["lo"], g["hi"], policy.recheck_points)
        phi = rng.uniform(0.0, math.pi, policy.recheck_points)
        from packlp.geometry import ck_polar
        t, s = ck_polar(R, phi)
        return float(np.max(f(t, s)))
    t = rng.uniform(g["lo"], g["hi"], policy.recheck_points)
    return float(np.max(np.asarray(f(t), dtype=float)))


def refine_until_certified(geom, r, basis, budget=6, policy=None, spectral_grid=None,
                           spatial_spacing=None, margins=None, on_round=None):
    """Alternate LP solves and certification, refining grids with exchange points.

    Returns (certificate, bound).  Each failed round adds the certifier's
    local extrema to the LP grids and scales nonzero margins by 4.
    """
    from packlp.witness_lp import build_lp, make_spatial_grid, solve_lp

    if budget < 1:
        raise DomainError("budget must be at least 1")
    policy = policy or CertifyPolicy()
    grid = spectral_grid if spectral_grid is not None else basis.default_spectral_grid()
    eps = list(basis.margins if margins is None else margins)
    extra_sp = []
    history = []
    last = None
    for rnd in range(1, budget + 1):
        sg = make_spatial_grid(basis, r, spatial_spacing, extra=extra_sp)
        lp = build_lp(geom, r, basis, grid, sg, tuple(eps))
        sol = solve_lp(lp)
        entry = {"round": rnd, "status": sol.status, "objective": _num(sol.objective),
                 "margins": list(eps), "spectral_points": len(grid), "spatial_points": len(sg)}
        if not sol.optimal:
            history.append(entry)
            if on_round:
                on_round(entry)
            if sol.status == "infeasible" and any(e > 0 for e in eps):
                eps = [e / 10.0 for e in eps]
                continue
            break
        f = RadialFunction.from_basis(basis, sol.coefficients, label=f"{basis.family} round {rnd}")
        pol = policy if policy.spatial_spacing else _with_spacing(policy, sg.spacing)
        cert = certify_witness(geom, r, f, pol, grid, sg.points if sg.points.ndim == 1 else ())
        cert.w1_report.setdefault("lp", {}).update(sg.to_dict())
        entry.update(verdict=cert.verdict, reason=cert.reason, bound=_num(cert.bound))
        history.append(entry)
        if on_round:
            on_round(entry)
        cert.w1_report["rounds"] = history
        if cert.certified:
            return cert, cert.bound
        last = cert
        extra_sp += _cluster(cert.w1_report.get("exchange", []), sg.spacing)
        ex = cert.w2_report.get("exchange", [])
        if ex:
            grid = grid.union([p for p in ex if _valid_point(geom, p)])
        # grow margins toward the observed relative violation (geometric mean)
        v1 = max(0.0, cert.w1_report.get("max_value", 0.0)) / max(abs(cert.fe), 1e-300)
        v2 = max(0.0, -cert.w2_report.get("min_value", 0.0)) / cert.fhat_one if cert.fhat_one > 0 else 0.0
        eps = [max(4.0 * e, math.sqrt(e * v)) if e > 0 else e for e, v in zip(eps, (v1, v2))]
    raise BudgetExhausted(f"no certified witness within {budget} rounds",
                          diagnostics={"rounds": history,
                                       "last": last.to_dict() if last is not None else None})


def _cluster(points, h, levels=12):
    """Exchange points plus neighbours at distances h·2^-j, j < levels (1-D grids only)."""
    out = []
    offsets = h * 2.0 ** -np.arange(levels)
    for p in points:
        if np.ndim(p) == 0:
            out += [float(p)] + list(float(p) + offsets) + list(float(p) - offsets)
        else:
            out.append(p)
    return out


def _with_spacing(policy, h):
    d = policy.to_dict()
    d["spatial_spacing"] = h
    return CertifyPolicy(**d)


def _valid_point(geom, p):
    from packlp.spectra import check_point

    try:
        check_point(geom, p)
        return True
    except Exception:  # noqa: BLE001
        return False
