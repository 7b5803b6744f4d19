"""Command-line entry point: ``packlp <subcommand> ...``.

Every invocation is first turned into a :class:`RunConfig`, which can be
saved with ``--save-config`` and replayed with ``--config``.  Exit status
is 0 when the requested verdict is certified/passed, 1 on numeric failure
and 2 on usage errors.
"""
import argparse
import csv
import json
import logging
import math
import os
import sys
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone

import numpy as np

from packlp.errors import BudgetExhausted, DomainError, PackLPError, SpectrumMismatch

log = logging.getLogger("packlp")

SUBCOMMANDS = ("bound", "certify", "transform", "abel", "density", "kissing", "selftest")
GEOMETRIES = ("euclidean", "hyperbolic", "sphere", "heisenberg")
FAMILIES = ("gauss_poly", "tent", "sphere_harmonic", "heis_heat", "heis_gauss_poly")
_POLICY_FLOATS = ("w2_tol", "fhat_min", "tail_rel", "recheck_tol")


class UsageError(ValueError):
    """Invalid configuration; exit status 2."""


@dataclass
class RunConfig:
    """Everything a run depends on; round-trips through JSON unchanged."""

    subcommand: str
    geometry: dict = field(default_factory=dict)
    params: dict = field(default_factory=dict)
    policy: dict = field(default_factory=dict)
    outputs: dict = field(default_factory=dict)
    seed: int = 20240611
    budget: int = 6

    def validate(self):
        if self.subcommand not in SUBCOMMANDS:
            raise UsageError(f"unknown subcommand {self.subcommand!r}")
        if self.budget < 1:
            raise UsageError("budget must be at least 1")
        for k in _POLICY_FLOATS:
            if k in self.policy and not self.policy[k] > 0:
                raise UsageError(f"tolerance {k} must be positive")
        if self.geometry:
            if self.geometry.get("kind") not in GEOMETRIES:
                raise UsageError(f"unknown geometry {self.geometry.get('kind')!r}")
            if int(self.geometry.get("n", 0)) < 1:
                raise UsageError("dimension must be at least 1")
            if not self.geometry.get("measure_scale", 1.0) > 0:
                raise UsageError("measure scale must be positive")
        return self

    def to_json(self):
        return json.dumps(asdict(self), sort_keys=True, indent=2)

    @classmethod
    def from_dict(cls, d):
        known = cls.__dataclass_fields__
        extra = set(d) - set(known)
        if extra:
            raise UsageError(f"unknown config keys {sorted(extra)}")
        return cls(**d).validate()

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


# -- helpers ----------------------------------------------------------------

def _geometry(cfg):
    from packlp.geometry import from_config
    g = cfg.geometry
    if not g:
        raise UsageError("this subcommand needs --geometry and --n")
    try:
        return from_config({"geometry": g["kind"], "n": int(g["n"]), "measure_scale": g.get("measure_scale", 1.0)})
    except (DomainError, TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from exc


def _policy(cfg):
    from packlp.certify import CertifyPolicy
    d = dict(cfg.policy)
    d["seed"] = cfg.seed
    try:
        return CertifyPolicy(**d)
    except (TypeError, DomainError) as exc:
        raise UsageError(str(exc)) from exc


def default_family(geom):
    if geom.kind == "sphere":
        return "sphere_harmonic"
    if geom.kind == "heisenberg":
        return "heis_heat"
    if geom.kind == "euclidean" and geom.n == 1:
        return "tent"
    return "gauss_poly"


def design_flags(geom, family):
    """Conventions that shape this run, logged so every output is interpretable."""
    flags = []
    if geom.kind == "heisenberg":
        flags.append("heisenberg: Cygan-Koranyi norm (t² + s⁴)^(1/4)")
        flags.append("heisenberg: radial Jacobian (2π^n/Γ(n)) s^(2n-1) in Haar measure")
        flags.append("heisenberg: witnesses are even in the central variable")
        if family == "heis_gauss_poly":
            flags.append("heisenberg: family heis_gauss_poly resolved to heat kernels (heis_heat)")
    if geom.kind == "hyperbolic":
        flags.append("hyperbolic: transforms through the Abel factorization f̂ = ĝ")
        flags.append("hyperbolic: imaginary spectral segment checked by sampling")
    if geom.kind == "sphere":
        flags.append("sphere: Gegenbauer index (n-1)/2, half-angle 2F1 argument")
    if geom.kind == "euclidean" and family == "tent":
        flags.append("euclidean: tent family admits the exact triangle witness")
    return flags


def _emit(obj, path, cfg):
    if cfg.outputs.get("timestamp"):
        obj = dict(obj)
        obj["_run"] = {"timestamp": datetime.now(timezone.utc).isoformat()}
    text = json.dumps(_jsonable(obj), sort_keys=True, indent=2)
    if path:
        tmp = path + ".tmp"
        with open(tmp, "w") as fh:
            fh.write(text + "\n")
        os.replace(tmp, path)
    else:
        print(text)


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, float)):
        v = float(x)
        return v if math.isfinite(v) else None
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if hasattr(x, "to_dict"):
        return _jsonable(x.to_dict())
    return x


def _write_grid_csv(path, cert):
    rows = cert.w1_report.get("rounds", [])
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["round", "status", "objective", "spectral_points", "spatial_points", "margin_w1", "margin_w2"])
        for r in rows:
            w.writerow([r["round"], r["status"], r.get("objective"), r["spectral_points"],
                        r["spatial_points"], r["margins"][0], r["margins"][1]])


def _make_basis(geom, cfg):
    from packlp.bases import make_basis
    p = cfg.params
    family = p.get("family") or default_family(geom)
    try:
        return make_basis(geom, family, p.get("degree"), p.get("scale"), r=p.get("radius"))
    except DomainError as exc:
        raise UsageError(str(exc)) from exc


# -- subcommands ------------------------------------------------------------

def cmd_bound(cfg):
    from packlp.certify import refine_until_certified
    geom = _geometry(cfg)
    r = cfg.params.get("radius")
    if r is None or not r > 0:
        raise UsageError("--radius must be positive")
    basis = _make_basis(geom, cfg)
    for flag in design_flags(geom, cfg.params.get("family") or basis.family):
        log.info("design flag: %s", flag)
    try:
        cert, bound = refine_until_certified(geom, r, basis, budget=cfg.budget, policy=_policy(cfg),
                                             on_round=lambda e: log.info("round %s", e))
    except BudgetExhausted as exc:
        _emit({"status": "budget_exhausted", "reason": str(exc), "diagnostics": exc.diagnostics},
              cfg.outputs.get("out"), cfg)
        return 1
    for a in cert.assumptions:
        log.info("assumption: %s", a)
    out = cert.to_dict()
    if geom.kind == "sphere":
        out["code_bound"] = _sphere_area(geom) * cert.fe / cert.fhat_one
    _emit(out, cfg.outputs.get("out"), cfg)
    if cfg.outputs.get("grid_csv"):
        _write_grid_csv(cfg.outputs["grid_csv"], cert)
    return 0 if cert.certified else 1


def _sphere_area(geom):
    from packlp.geometry import sphere_area
    return geom.measure_scale * sphere_area(geom.n + 1)


def cmd_certify(cfg):
    from packlp.certify import certificate_from_dict, certify_witness, policy_from_dict
    path = cfg.params.get("certificate")
    try:
        with open(path) as fh:
            d = json.load(fh)
    except (OSError, TypeError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read certificate: {exc}") from exc
    try:
        geom, r, f = certificate_from_dict(d)
    except (KeyError, DomainError, SpectrumMismatch) as exc:
        raise UsageError(f"malformed certificate: {exc}") from exc
    for flag in design_flags(geom, f.basis_id):
        log.info("design flag: %s", flag)
    policy = policy_from_dict(d) if not cfg.policy else _policy(cfg)
    cert = certify_witness(geom, r, f, policy)
    report = cert.to_dict()
    report["input_bound"] = d.get("bound")
    _emit(report, cfg.outputs.get("out"), cfg)
    return 0 if cert.certified else 1


def cmd_transform(cfg):
    from packlp.geometry import RadialFunction
    from packlp.spectra import SpectralPoint, spherical_transform
    geom = _geometry(cfg)
    basis = _make_basis(geom, cfg)
    p = cfg.params
    coef = np.zeros(basis.size)
    given = p.get("coefficients") or [1.0]
    if len(given) > basis.size:
        raise UsageError(f"basis has {basis.size} elements, got {len(given)} coefficients")
    coef[:len(given)] = given
    kind = p.get("kind")
    try:
        pts = [SpectralPoint(kind, v, int(p.get("m", 0))) for v in p.get("values", [])]
        rows = basis.transform(pts) @ coef
    except (DomainError, SpectrumMismatch) as exc:
        raise UsageError(str(exc)) from exc
    out = {"geometry": geom.to_config(), "basis": basis.to_dict(), "coefficients": coef.tolist(),
           "points": [q.to_dict() for q in pts], "closed_form": rows.tolist()}
    if p.get("method") in ("quadrature", "both"):
        f = RadialFunction.from_basis(basis, coef)
        quad = [spherical_transform(geom, f, q) for q in pts]
        out["quadrature"] = quad
        out["max_abs_difference"] = float(np.max(np.abs(np.array(quad) - rows))) if pts else 0.0
    _emit(out, cfg.outputs.get("out"), cfg)
    return 0


def cmd_abel(cfg):
    from packlp.abel import abel_forward_values
    from packlp.bases import AbelGaussBasis, LaguerreGaussBasis
    from packlp.geometry import Euclidean, Hyperbolic, RadialFunction
    p = cfg.params
    n = int(p.get("n", 3))
    if n < 2:
        raise UsageError("the Abel transform needs n >= 2")
    prof = p.get("profile") or {}
    if isinstance(prof, str):
        with open(prof) as fh:
            prof = json.load(fh)
    K = int(prof.get("degree", 0))
    a = float(prof.get("scale", 1.0))
    coef = np.asarray(prof.get("coefficients", [1.0] + [0.0] * K), dtype=float)
    if coef.size != K + 1:
        raise UsageError("profile needs degree + 1 coefficients")
    ts = np.asarray(p.get("t") or np.linspace(0.0, 5.0, 11).tolist(), dtype=float)
    hb = AbelGaussBasis(Hyperbolic(n), K, a)
    line = LaguerreGaussBasis(Euclidean(1), K, a).values(ts) @ coef
    if p.get("direction", "inv") == "inv":
        vals = hb.values(ts) @ coef
        out = {"direction": "inv", "n": n, "t": ts.tolist(), "values": vals.tolist(), "input": line.tolist()}
    else:
        f = RadialFunction.from_basis(hb, coef)
        vals = abel_forward_values(f, ts)
        out = {"direction": "fwd", "n": n, "t": ts.tolist(), "values": np.asarray(vals).tolist(),
               "closed_form": line.tolist(),
               "max_abs_difference": float(np.max(np.abs(np.asarray(vals) - line)))}
    out["profile"] = {"family": "gauss_poly", "degree": K, "scale": a, "coefficients": coef.tolist()}
    _emit(out, cfg.outputs.get("out"), cfg)
    return 0


def cmd_density(cfg):
    from packlp.pointprocess import LatticeSpec, lattice_density, min_distance
    name = cfg.params.get("lattice")
    try:
        lat = LatticeSpec.from_name(name)
    except (OSError, ValueError, KeyError) as exc:
        raise UsageError(f"cannot build lattice {name!r}: {exc}") from exc
    out = {"lattice": lat.name, "n": lat.n, "lambda1": min_distance(lat), "covol": lat.covolume,
           "density": lattice_density(lat)}
    _emit(out, cfg.outputs.get("out"), cfg)
    return 0


def cmd_kissing(cfg):
    from packlp.pointprocess import icosahedron
    from packlp.witness_lp import delsarte_code_bound
    p = cfg.params
    n = int(p.get("n", 2))
    theta = float(p.get("theta", math.pi / 3))
    deg = int(p.get("degree", 10))
    if n < 1 or not 0 < theta <= math.pi or deg < 0:
        raise UsageError("need n >= 1, 0 < theta <= pi and degree >= 0")
    ub = delsarte_code_bound(n, theta, deg)
    out = {"n": n, "theta": theta, "degree": deg, "delsarte_bound": ub}
    ok = math.isfinite(ub)
    if n == 2:
        ico = icosahedron()
        out["lower_anchor"] = {"points": len(ico), "min_angle": ico.min_separation(),
                               "valid": bool(ico.min_separation() >= theta)}
        ok = ok and out["lower_anchor"]["valid"] and ub >= len(ico)
    _emit(out, cfg.outputs.get("out"), cfg)
    return 0 if ok else 1


def cmd_selftest(cfg):
    from packlp import selftest
    mods = cfg.params.get("modules") or ["all"]
    try:
        rows = selftest.run(mods)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    print(selftest.format_table(rows))
    if cfg.outputs.get("out"):
        _emit({"rows": rows}, cfg.outputs["out"], cfg)
    return 0 if all(r["passed"] for r in rows) else 1


_DISPATCH = {"bound": cmd_bound, "certify": cmd_certify, "transform": cmd_transform, "abel": cmd_abel,
             "density": cmd_density, "kissing": cmd_kissing, "selftest": cmd_selftest}


def run(cfg):
    """Execute a validated RunConfig; returns the exit status."""
    cfg.validate()
    return _DISPATCH[cfg.subcommand](cfg)


# -- argument parsing ---------------------------------------------------------

def _add_common(p, geometry=False):
    p.add_argument("--out", help="write JSON here instead of stdout")
    p.add_argument("--config", help="replay a saved RunConfig (other flags except --out and --timestamp are ignored)")
    p.add_argument("--save-config", help="write the RunConfig of this invocation")
    p.add_argument("--seed", type=int, default=20240611, help="seed of the randomized re-checks")
    p.add_argument("--timestamp", action="store_true", help="add a _run.timestamp field to the JSON")
    p.add_argument("--threads", type=int, help="cap internal parallelism (sets PACKLP_THREADS)")
    p.add_argument("-v", "--verbose", action="count", default=0)
    if geometry:
        p.add_argument("--geometry", choices=GEOMETRIES)
        p.add_argument("--n", type=int, help="dimension (Heisenberg: H_n)")
        p.add_argument("--measure-scale", type=float, default=1.0, help="constant multiplying the Haar density")
        p.add_argument("--family", choices=FAMILIES, help="witness basis (default depends on geometry)")
        p.add_argument("--degree", type=int, help="basis size parameter")
        p.add_argument("--scale", type=float, help="Gaussian width a of gauss_poly bases")


def build_parser():
    ap = argparse.ArgumentParser(prog="packlp", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("bound", help="compute and certify an LP bound")
    _add_common(p, geometry=True)
    p.add_argument("--radius", type=float, help="packing radius r")
    p.add_argument("--budget", type=int, default=6, help="LP/certify rounds")
    p.add_argument("--grid-csv", help="write per-round grid sizes as CSV")
    for k in _POLICY_FLOATS:
        p.add_argument("--" + k.replace("_", "-"), type=float, help=f"certifier {k}")

    p = sub.add_parser("certify", help="re-verify a certificate JSON")
    _add_common(p)
    p.add_argument("certificate")

    p = sub.add_parser("transform", help="spherical transform of a basis combination")
    _add_common(p, geometry=True)
    p.add_argument("--coef", type=float, nargs="*", help="coefficients (default: first element)")
    p.add_argument("--kind", required=False, help="spectral family, e.g. euclidean, hyperbolic_real, heisenberg_a")
    p.add_argument("--values", type=float, nargs="*", default=[], help="spectral parameters")
    p.add_argument("--m", type=int, default=0, help="Laguerre index of heisenberg_a points")
    p.add_argument("--method", choices=("closed", "quadrature", "both"), default="closed")

    p = sub.add_parser("abel", help="Abel transform of Laguerre-Gauss profiles")
    _add_common(p)
    p.add_argument("--dir", choices=("fwd", "inv"), default="inv")
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--profile", help='JSON {"degree", "scale", "coefficients"}; default Gaussian')
    p.add_argument("--t", type=float, nargs="*", help="radii to sample")

    p = sub.add_parser("density", help="lattice packing density")
    _add_common(p)
    p.add_argument("--lattice", required=True, help="A2, D4, E8, Z:n or a JSON file")

    p = sub.add_parser("kissing", help="Delsarte bound for spherical codes")
    _add_common(p)
    p.add_argument("--n", type=int, default=2, help="sphere S^n")
    p.add_argument("--theta", type=float, default=math.pi / 3, help="minimal angle")
    p.add_argument("--degree", type=int, default=10)

    p = sub.add_parser("selftest", help="run the invariant suite")
    _add_common(p)
    p.add_argument("modules", nargs="*", default=["all"])
    return ap


def config_from_args(args):
    sc = args.subcommand
    params, geometry, policy = {}, {}, {}
    outputs = {"out": args.out, "timestamp": bool(args.timestamp)}
    if getattr(args, "geometry", None) or (sc in ("bound", "transform") and args.n is not None):
        geometry = {"kind": args.geometry, "n": args.n, "measure_scale": args.measure_scale}
    if sc in ("bound", "transform"):
        params.update(family=args.family, degree=args.degree, scale=args.scale)
    if sc == "bound":
        params["radius"] = args.radius
        outputs["grid_csv"] = args.grid_csv
        for k in _POLICY_FLOATS:
            v = getattr(args, k)
            if v is not None:
                policy[k] = v
    elif sc == "certify":
        params["certificate"] = args.certificate
    elif sc == "transform":
        params.update(coefficients=args.coef, kind=args.kind, values=args.values, m=args.m, method=args.method)
    elif sc == "abel":
        params.update(direction=args.dir, n=args.n, profile=args.profile, t=args.t)
    elif sc == "density":
        params["lattice"] = args.lattice
    elif sc == "kissing":
        params.update(n=args.n, theta=args.theta, degree=args.degree)
    elif sc == "selftest":
        params["modules"] = args.modules
    return RunConfig(sc, geometry, params, policy, outputs, args.seed,
                     getattr(args, "budget", 6)).validate()


def main(argv=None):
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    if args.threads:
        os.environ["PACKLP_THREADS"] = str(args.threads)
    try:
        if args.config:
            with open(args.config) as fh:
                cfg = RunConfig.from_json(fh.read())
            if args.out:
                cfg.outputs["out"] = args.out
            if args.timestamp:
                cfg.outputs["timestamp"] = True
        else:
            cfg = config_from_args(args)
        if args.save_config:
            with open(args.save_config, "w") as fh:
                fh.write(cfg.to_json() + "\n")
        return run(cfg)
    except (UsageError, OSError, json.JSONDecodeError) as exc:
        print(f"packlp: error: {exc}", file=sys.stderr)
        return 2
    except PackLPError as exc:
        diag = getattr(exc, "diagnostics", None)
        print(json.dumps({"error": type(exc).__name__, "message": str(exc),
                          "diagnostics": _jsonable(diag)}, sort_keys=True), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
