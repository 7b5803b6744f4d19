import math

import pytest

from packlp.bases import AbelGaussBasis, LaguerreGaussBasis, SphereHarmonicBasis, TentBasis, make_basis
from packlp.certify import refine_until_certified
from packlp.geometry import Euclidean, Heisenberg, Hyperbolic, Sphere

_CACHE = {}

WITNESS_SETUPS = {
    "tent": (Euclidean(1), 0.5, lambda g: TentBasis(g, 8, 0.5)),
    "e1": (Euclidean(1), 0.5, lambda g: LaguerreGaussBasis(g, 12, 1.1)),
    "e2": (Euclidean(2), 0.5, lambda g: LaguerreGaussBasis(g, 24, 1.1)),
    "s2": (Sphere(2), math.pi / 6, lambda g: SphereHarmonicBasis(g, 10)),
    "h2": (Hyperbolic(2), 0.5, lambda g: AbelGaussBasis(g, 10, 1.0)),
    "h3": (Hyperbolic(3), 0.5, lambda g: AbelGaussBasis(g, 12, 1.0)),
    "heis1": (Heisenberg(1), 0.5, lambda g: make_basis(g, "heis_heat", r=0.5)),
}


def certified(name):
    """(certificate, bound, seconds) for a named setup, computed once per session."""
    if name not in _CACHE:
        import time
        geom, r, make = WITNESS_SETUPS[name]
        t0 = time.perf_counter()
        cert, bound = refine_until_certified(geom, r, make(geom))
        _CACHE[name] = (cert, bound, time.perf_counter() - t0)
    return _CACHE[name]


def euclid_certified(n, r, degree=16):
    """Certified Gauss-Laguerre witness on R^n at packing radius r (cached)."""
    key = ("euclid", n, round(r, 12), degree)
    if key not in _CACHE:
        g = Euclidean(n)
        scale = (3.0 if n > 4 else 2.2) * r
        _CACHE[key] = refine_until_certified(g, r, LaguerreGaussBasis(g, degree, scale))
    return _CACHE[key]


@pytest.fixture(scope="session")
def witness():
    return certified


# five certified witnesses per lattice dimension for the Poisson chain
LATTICE_WITNESS_BASES = {
    1: [lambda g: TentBasis(g, 8, 0.5), lambda g: TentBasis(g, 3, 0.5), lambda g: LaguerreGaussBasis(g, 8, 1.1),
        lambda g: LaguerreGaussBasis(g, 12, 1.1), lambda g: LaguerreGaussBasis(g, 16, 1.4)],
    2: [lambda g, k=k, a=a: LaguerreGaussBasis(g, k, a)
        for k, a in ((8, 1.1), (12, 1.0), (16, 1.2), (20, 1.1), (24, 1.3))],
}


def lattice_witnesses(n):
    """Certificates of the five witnesses used against Z^n (cached)."""
    key = ("lattice", n)
    if key not in _CACHE:
        g = Euclidean(n)
        _CACHE[key] = [refine_until_certified(g, 0.5, make(g))[0] for make in LATTICE_WITNESS_BASES[n]]
    return _CACHE[key]


ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE):
            terminalreporter.write_line(line)
