"""Fast invariant checks per module, run by ``packlp selftest``."""
import math
import time

import numpy as np

MODULES = ("specfun", "geometry", "spectra", "abel", "witness_lp", "certify", "pointprocess", "heisenberg")


def _specfun():
    from packlp import specfun
    z = -np.linspace(0.0, 40.0, 41)[1:]
    got = specfun.gauss_2f1(1.0, 1.0, 2.0, z)
    want = np.log1p(-z) / (-z)
    yield "2F1(1,1;2;z) = log(1-z)/(-z)", float(np.max(np.abs(got - want) / np.abs(want))) < 1e-11
    x = np.linspace(-1, 1, 21)
    yield "sphere_poly(l, n, 1) = 1", abs(specfun.sphere_poly(7, 3, np.ones(1))[0] - 1) < 1e-13
    yield "bessel_ratio(1/2, x) = sin x / x", float(np.max(np.abs(
        specfun.bessel_ratio(0.5, x[x != 0] + 2) - np.sin(x[x != 0] + 2) / (x[x != 0] + 2)))) < 1e-13


def _geometry():
    from packlp.geometry import Euclidean, Heisenberg, Hyperbolic, Sphere, ball_volume
    for g in (Euclidean(3), Heisenberg(1)):
        d = g.n if g.kind == "euclidean" else 2 * g.n + 2
        ratio = ball_volume(g, 1.7) / ball_volume(g, 1.0)
        yield f"{g.kind} ball dilation r^{d}", abs(ratio / 1.7 ** d - 1) < 1e-10
    yield "S^2 cap area 2π(1 - cos r)", abs(ball_volume(Sphere(2), 1.0) - 2 * math.pi * (1 - math.cos(1.0))) < 1e-12
    yield "H^2 ball area 2π(cosh r - 1)", abs(ball_volume(Hyperbolic(2), 1.0) - 2 * math.pi * (math.cosh(1.0) - 1)) < 1e-12


def _spectra():
    from packlp.geometry import Hyperbolic
    from packlp.spectra import SpectralPoint, spherical_function
    t = np.linspace(0.1, 5.0, 20)
    worst = 0.0
    for lam in np.linspace(0.1, 10.0, 10):
        phi = spherical_function(Hyperbolic(3), SpectralPoint("hyperbolic_real", lam), t)
        worst = max(worst, float(np.max(np.abs(phi - np.sin(lam * t) / (lam * np.sinh(t))))))
    yield "H^3 closed form sin(λt)/(λ sinh t)", worst < 1e-8
    v = spherical_function(Hyperbolic(2), SpectralPoint("hyperbolic_imag", 0.5), np.array([0.0, 1.0, 3.0]))
    yield "trivial character of H^2 is 1", float(np.max(np.abs(v - 1))) < 1e-10


def _abel():
    from packlp.abel import EvenLineFunction, abel_forward_values, abel_inverse_odd
    from packlp.geometry import Envelope
    g = EvenLineFunction(lambda t: np.exp(-np.asarray(t) ** 2), Envelope(1.0, 1.0, 0.0))
    f = abel_inverse_odd(g, 3)
    t = np.linspace(0.0, 3.0, 7)
    err = float(np.max(np.abs(abel_forward_values(f, t) - np.exp(-t ** 2))))
    yield "A∘A⁻¹ = id (n = 3)", err < 1e-6


def _witness_lp():
    from packlp.bases import TentBasis
    from packlp.geometry import Euclidean
    from packlp.witness_lp import lp_bound
    g = Euclidean(1)
    sol, bound, _ = lp_bound(g, 0.5, TentBasis(g, 8, 0.5))
    yield "tent LP on the line gives 1", sol.optimal and abs(bound - 1.0) < 1e-9


def _certify():
    from packlp.certify import certify_witness
    from packlp.geometry import Euclidean, zero_function
    cert = certify_witness(Euclidean(1), 0.5, zero_function(Euclidean(1)))
    yield "zero function is rejected", cert.verdict == "rejected"


def _pointprocess():
    from packlp.pointprocess import LatticeSpec, icosahedron, lattice_density, min_distance
    yield "A2 density π/√12", abs(lattice_density(LatticeSpec.from_name("A2")) - math.pi / math.sqrt(12)) < 1e-12
    yield "E8 minimum √2", abs(min_distance(LatticeSpec.from_name("E8")) - math.sqrt(2)) < 1e-12
    yield "icosahedron separation ≥ 60°", icosahedron().min_separation() >= math.pi / 3


def _heisenberg():
    from packlp.geometry import Heisenberg
    from packlp.spectra import SpectralPoint, spherical_function
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(50):
        p = SpectralPoint("heisenberg_a", rng.uniform(-5, 5) or 1.0, int(rng.integers(0, 6)))
        q = SpectralPoint("heisenberg_b", rng.uniform(0, 5))
        for pt in (p, q):
            worst = max(worst, abs(float(spherical_function(Heisenberg(2), pt, 0.0, 0.0)) - 1.0))
    yield "spherical functions equal 1 at the identity", worst < 1e-12


_SUITES = {"specfun": _specfun, "geometry": _geometry, "spectra": _spectra, "abel": _abel,
           "witness_lp": _witness_lp, "certify": _certify, "pointprocess": _pointprocess,
           "heisenberg": _heisenberg}


def run(modules=("all",)):
    """Run the selected suites; returns a list of row dicts."""
    names = MODULES if "all" in modules else modules
    rows = []
    for name in names:
        if name not in _SUITES:
            raise ValueError(f"unknown selftest module {name!r}")
        t0 = time.perf_counter()
        try:
            for label, ok in _SUITES[name]():
                rows.append({"module": name, "check": label, "passed": bool(ok)})
        except Exception as exc:  # noqa: BLE001 - a crash is a failed check
            rows.append({"module": name, "check": f"raised {type(exc).__name__}: {exc}", "passed": False})
        rows[-1]["seconds"] = round(time.perf_counter() - t0, 3)
    return rows


def format_table(rows):
    width = max(len(r["check"]) for r in rows) if rows else 10
    lines = [f"{'module':<13}{'check':<{width + 2}}result"]
    for r in rows:
        lines.append(f"{r['module']:<13}{r['check']:<{width + 2}}{'PASS' if r['passed'] else 'FAIL'}")
    return "\n".join(lines)
