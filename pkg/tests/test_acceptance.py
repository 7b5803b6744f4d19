"""One test per acceptance criterion; each prints a PASS/FAIL line with its timing."""
import json
import math
import time
from contextlib import contextmanager
from pathlib import Path

import numpy as np
import pytest

from battery import HYPERBOLIC_PROFILES, LINE_PROFILES, hyperbolic_profile, line_profile
from conftest import ACCEPTANCE, WITNESS_SETUPS, certified, lattice_witnesses
from packlp.abel import abel_forward_values, abel_inverse_even, abel_inverse_odd, factorization_residual, witness_pushforward
from packlp.certify import CertifyPolicy, certify_witness, refine_until_certified
from packlp.geometry import (Envelope, Euclidean, GeometryDescriptor, Heisenberg, Hyperbolic, RadialFunction,
                             ball_volume)
from packlp.pointprocess import LatticeSpec, icosahedron, lattice_density, poisson_chain_check
from packlp.spectra import SpectralPoint, spherical_function, spherical_transform
from packlp.witness_lp import delsarte_code_bound, lp_bound, make_spatial_grid

FIXTURE = Path(__file__).parent / "fixtures" / "heisenberg_h1_bound.json"


@contextmanager
def criterion(k, title):
    t0 = time.perf_counter()
    state = {"ok": False, "detail": ""}
    try:
        yield state
        state["ok"] = True
    finally:
        line = f"criterion {k:2d} {'PASS' if state['ok'] else 'FAIL'} [{time.perf_counter() - t0:7.1f}s] {title}"
        if state["detail"]:
            line += f": {state['detail']}"
        ACCEPTANCE.append(line)
        print(line)


def test_c01_line_tent():
    with criterion(1, "R^1, r=1/2: certified tent bound 1") as st:
        t0 = time.perf_counter()
        g = Euclidean(1)
        cert, bound = refine_until_certified(g, 0.5, WITNESS_SETUPS["tent"][2](g))
        dt = time.perf_counter() - t0
        st["detail"] = f"bound={bound:.15f}, {dt:.2f}s"
        assert cert.certified and cert.function.basis.family == "tent"
        assert abs(bound - 1.0) <= 1e-9
        assert dt < 5.0


def test_c02_plane():
    with criterion(2, "R^2, r=1/2: certified bound in [0.9069, 0.96] above the A2 density") as st:
        cert, bound, dt = certified("e2")
        a2 = lattice_density(LatticeSpec.from_name("A2"))
        st["detail"] = f"bound={bound:.10f}, A2={a2:.10f}, degree={cert.function.basis.degree}, {dt:.1f}s"
        assert cert.certified
        assert cert.function.basis.degree <= 24
        assert 0.9069 <= bound <= 0.96
        assert bound > a2
        assert dt < 120.0


def test_c03_kissing():
    with criterion(3, "S^2 kissing, degree 10: Delsarte bound in [12, 13.2] with the icosahedron anchor") as st:
        t0 = time.perf_counter()
        ub = delsarte_code_bound(2, math.pi / 3, 10)
        ico = icosahedron()
        dt = time.perf_counter() - t0
        st["detail"] = f"bound={ub:.6f}, icosahedron {len(ico)} points at {math.degrees(ico.min_separation()):.4f} deg"
        assert 12.0 <= ub <= 13.2
        assert len(ico) == 12 and ico.min_separation() >= math.pi / 3
        assert ub >= len(ico)
        assert dt < 60.0


def test_c04_h3_closed_form():
    with criterion(4, "H^3 spherical functions against sin(λt)/(λ sinh t)") as st:
        t = np.linspace(0.1, 5, 50)
        worst = 0.0
        for lam in np.linspace(0.1, 10, 50):
            v = spherical_function(Hyperbolic(3), SpectralPoint("hyperbolic_real", lam), t)
            worst = max(worst, float(np.max(np.abs(v - np.sin(lam * t) / (lam * np.sinh(t))))))
        st["detail"] = f"max error {worst:.2e}"
        assert worst <= 1e-8


def test_c05_abel():
    with criterion(5, "Abel factorization and inverse roundtrips") as st:
        fact = 0.0
        for n in (2, 3):
            for k in range(len(HYPERBOLIC_PROFILES)):
                f = hyperbolic_profile(n, k)
                for lam in np.linspace(0, 9, 10):
                    fh = spherical_transform(f.geometry, f, SpectralPoint("hyperbolic_real", lam))
                    fact = max(fact, factorization_residual(f, lam) / (1 + abs(fh)))
        trip = {}
        t = np.linspace(0, 5, 101)
        for n in (2, 3, 4, 5):
            for k in range(len(LINE_PROFILES)):
                g = line_profile(k)
                f = abel_inverse_odd(g, n) if n % 2 else abel_inverse_even(g, n)
                trip[n] = max(trip.get(n, 0.0), float(np.max(np.abs(abel_forward_values(f, t) - g(t)))))
        st["detail"] = f"factorization {fact:.1e}, roundtrip " + ", ".join(f"n={n}: {e:.1e}" for n, e in trip.items())
        assert fact <= 1e-6
        assert trip[3] <= 1e-6 and trip[5] <= 1e-6
        assert trip[2] <= 1e-5 and trip[4] <= 1e-5


def test_c06_pushforward():
    with criterion(6, "certified hyperbolic witnesses push forward to line witnesses") as st:
        worst = math.inf
        parts = []
        for name in ("h2", "h3"):
            cert, _, _ = certified(name)
            assert cert.certified
            res = witness_pushforward(cert)
            m = min(res.certificate.w1_margin, res.certificate.w2_margin)
            worst = min(worst, m)
            parts.append(f"{name}: margin {m:.2e}, line bound {res.bound:.6f}")
        st["detail"] = "; ".join(parts)
        assert worst >= -1e-10


def test_c07_poisson_chain():
    with criterion(7, "Poisson summation and density chain on Z and Z^2") as st:
        diff, slack, count = 0.0, math.inf, 0
        for n in (1, 2):
            lat = LatticeSpec.from_name(f"Z:{n}")
            for cert in lattice_witnesses(n):
                assert cert.certified
                rep = poisson_chain_check(lat, cert.function, r=0.5)
                diff = max(diff, rep["poisson_diff"] / max(abs(rep["spatial_sum"]), abs(cert.fe)))
                slack = min(slack, min(rep["slack"].values()))
                count += 1
        tent = poisson_chain_check(LatticeSpec.from_name("Z:1"), lattice_witnesses(1)[0].function, r=0.5)
        st["detail"] = (f"{count} witnesses, Poisson {diff:.1e}, min slack {slack:.2e}, "
                        f"tent slacks {tent['slack']['spatial']:.1e}/{tent['slack']['spectral']:.1e}")
        assert count == 10
        assert diff <= 1e-9
        assert slack >= -1e-10
        assert tent["equality"] and tent["poisson_ok"]


def test_c08_heisenberg():
    with criterion(8, "Heisenberg identities and regression bound") as st:
        rng = np.random.default_rng(8)
        worst = 0.0
        for _ in range(200):
            n = int(rng.integers(1, 4))
            if rng.random() < 0.5:
                p = SpectralPoint("heisenberg_a", rng.choice([-1, 1]) * rng.uniform(1e-3, 40), int(rng.integers(0, 25)))
            else:
                p = SpectralPoint("heisenberg_b", rng.uniform(0, 40))
            worst = max(worst, abs(spherical_function(Heisenberg(n), p, 0.0, 0.0) - 1.0))
        dil = 0.0
        for n in (1, 2, 3):
            for r in (0.4, 2.5):
                dil = max(dil, abs(ball_volume(Heisenberg(n), r) / ball_volume(Heisenberg(n), 1.0) / r ** (2 * n + 2) - 1))
        cert, bound, dt = certified("heis1")
        assert cert.certified and math.isfinite(bound) and bound > 0
        if not FIXTURE.exists():
            FIXTURE.parent.mkdir(exist_ok=True)
            FIXTURE.write_text(json.dumps({"setup": "heis1", "geometry": cert.geometry.to_config(), "r": cert.r,
                                           "basis": cert.function.basis.to_dict(), "bound": bound}, indent=2) + "\n")
        ref = json.loads(FIXTURE.read_text())
        st["detail"] = f"identity {worst:.1e}, dilation {dil:.1e}, bound {bound:.12f} (fixture {ref['bound']:.12f}), {dt:.0f}s"
        assert worst <= 1e-12
        assert dil <= 1e-10
        assert ref["basis"] == cert.function.basis.to_dict()
        assert bound == pytest.approx(ref["bound"], rel=1e-9)


def _rescaled(name, c):
    g, r, make = WITNESS_SETUPS[name]
    gc = GeometryDescriptor(g.kind, g.n, c)
    b = make(gc)
    if g.kind == "heisenberg":
        sol, lp_b, _ = lp_bound(gc, r, b, b.default_spectral_grid(count=1000),
                                make_spatial_grid(b, r, spacing=4 * b.default_spatial_spacing(r)))
    else:
        sol, lp_b, _ = lp_bound(gc, r, b)
    assert sol.optimal
    cert, bound = refine_until_certified(gc, r, make(gc))
    assert cert.certified
    return lp_b, bound


def test_c09_measure_scale():
    with criterion(9, "Haar normalization c in {0.1, 3, 7} leaves bounds unchanged") as st:
        worst_lp, worst_cert = 0.0, 0.0
        for name in WITNESS_SETUPS:
            lp0, b0 = _rescaled(name, 1.0)
            for c in (0.1, 3.0, 7.0):
                lp_c, b_c = _rescaled(name, c)
                worst_lp = max(worst_lp, abs(lp_c / lp0 - 1))
                worst_cert = max(worst_cert, abs(b_c / b0 - 1))
        st["detail"] = f"{len(WITNESS_SETUPS)} setups, LP optimum {worst_lp:.1e}, certified bound {worst_cert:.1e}"
        assert worst_lp <= 1e-10
        assert worst_cert <= 1e-10


def _nested_optima(name):
    g, r, make = WITNESS_SETUPS[name]
    b = make(g)
    h0 = b.default_spatial_spacing(r)
    out = []
    for ref in range(3):
        if g.kind == "heisenberg":
            grid = b.default_spectral_grid(count=1000 * 2 ** ref)
        else:
            grid = b.default_spectral_grid(refinement=ref)
        sol, _, _ = lp_bound(g, r, b, grid, make_spatial_grid(b, r, spacing=4 * h0 / 2 ** ref))
        assert sol.optimal
        out.append(sol.objective)
    return out


def test_c10_refinement():
    with criterion(10, "nested grids give non-decreasing LP optima; verdicts stable under 4x refinement") as st:
        mono = {}
        for name in WITNESS_SETUPS:
            objs = _nested_optima(name)
            mono[name] = min((b - a) / abs(a) for a, b in zip(objs, objs[1:]))
        stable = []
        for name in WITNESS_SETUPS:
            cert, _, _ = certified(name)
            g, r, _ = WITNESS_SETUPS[name]
            p = dict(cert.policy)
            p["spatial_refine"] *= 4
            p["spectral_refine"] *= 4
            stable.append(certify_witness(g, r, cert.function, CertifyPolicy(**p)).verdict == cert.verdict)
        # a rejected candidate stays rejected
        g = Euclidean(1)
        gauss = RadialFunction(g, lambda t: np.exp(-np.asarray(t) ** 2), Envelope(1.0, 1.0, 0.0))
        coarse = certify_witness(g, 0.5, gauss)
        fine = certify_witness(g, 0.5, gauss, CertifyPolicy(spatial_refine=16, spectral_refine=16))
        stable.append(coarse.verdict == fine.verdict == "rejected")
        st["detail"] = (f"min relative step {min(mono.values()):.1e} over {len(mono)} geometries, "
                        f"{sum(stable)}/{len(stable)} verdicts stable")
        assert all(v >= -1e-12 for v in mono.values()), mono
        assert all(stable)
