import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from packlp.errors import DomainError, SpectrumMismatch
from packlp.geometry import (Envelope, Euclidean, Heisenberg, Hyperbolic, RadialFunction, Sphere,
                             trivial_transform, zero_function)
from packlp.spectra import (SpectralGrid, SpectralPoint, product_formula_residual, spherical_function,
                            spherical_transform, transform_on_grid, trivial_point, uniform_grid)
from packlp import specfun


def _random_point(geom, rng):
    if geom.kind == "euclidean":
        return SpectralPoint("euclidean", rng.uniform(0, 30))
    if geom.kind == "hyperbolic":
        if rng.random() < 0.5:
            return SpectralPoint("hyperbolic_real", rng.uniform(0, 30))
        return SpectralPoint("hyperbolic_imag", rng.uniform(1e-3, 1) * geom.rho)
    if geom.kind == "sphere":
        return SpectralPoint("sphere", int(rng.integers(0, 40)))
    if rng.random() < 0.5:
        return SpectralPoint("heisenberg_a", rng.choice([-1, 1]) * rng.uniform(0.01, 20), int(rng.integers(0, 12)))
    return SpectralPoint("heisenberg_b", rng.uniform(0, 20))


GEOMS = [Euclidean(1), Euclidean(3), Hyperbolic(2), Hyperbolic(3), Sphere(2), Sphere(4), Heisenberg(1), Heisenberg(2)]


def _phi(geom, p, t):
    if geom.kind == "heisenberg":
        return spherical_function(geom, p, t[0], t[1])
    return spherical_function(geom, p, t)


@pytest.mark.parametrize("geom", GEOMS, ids=str)
def test_normalization_at_identity(geom):
    rng = np.random.default_rng(1)
    for _ in range(100):
        p = _random_point(geom, rng)
        v = _phi(geom, p, (0.0, 0.0) if geom.kind == "heisenberg" else 0.0)
        assert abs(v - 1) <= 1e-12


@pytest.mark.parametrize("geom", GEOMS, ids=str)
def test_bounded_by_one(geom):
    rng = np.random.default_rng(2)
    for _ in range(1000):
        p = _random_point(geom, rng)
        if geom.kind == "heisenberg":
            t = (rng.uniform(-10, 10), rng.uniform(0, 6))
        elif geom.kind == "sphere":
            t = rng.uniform(0, math.pi)
        else:
            t = rng.uniform(0, 8)
        assert abs(_phi(geom, p, t)) <= 1 + 1e-9


def test_hyperbolic_closed_form():
    t = np.linspace(0.1, 5, 50)
    for lam in np.linspace(0.1, 10, 50):
        v = spherical_function(Hyperbolic(3), SpectralPoint("hyperbolic_real", lam), t)
        assert np.max(np.abs(v - np.sin(lam * t) / (lam * np.sinh(t)))) <= 1e-8


def test_hyperbolic_against_mpmath_h2():
    for lam in (0.0, 0.7, 4.0):
        for t in (0.5, 2.0, 6.0):
            want = float(mp.re(mp.hyp2f1((0.5 + 1j * lam) / 2, (0.5 - 1j * lam) / 2, 1, -mp.sinh(t) ** 2)))
            got = spherical_function(Hyperbolic(2), SpectralPoint("hyperbolic_real", lam), t)
            assert got == pytest.approx(want, abs=1e-10)


def test_hyperbolic_trivial_character_is_constant():
    for n in (2, 3, 6):
        g = Hyperbolic(n)
        v = spherical_function(g, trivial_point(g), np.linspace(0, 7, 15))
        assert np.max(np.abs(v - 1)) < 1e-10


def test_heisenberg_type_a_m0():
    g = Heisenberg(1)
    s = np.linspace(0, 3, 7)
    for lam in (0.3, 2.0):
        v = spherical_function(g, SpectralPoint("heisenberg_a", lam, 0), np.zeros_like(s), s)
        assert np.allclose(v, np.exp(-lam * s * s / 4), atol=1e-15)


def test_heisenberg_type_b_is_bessel():
    g = Heisenberg(2)
    s = np.linspace(0.1, 5, 9)
    v = spherical_function(g, SpectralPoint("heisenberg_b", 1.7), np.zeros_like(s), s)
    assert np.allclose(v, specfun.bessel_ratio(1, 1.7 * s), atol=1e-14)


def test_spectrum_mismatch():
    with pytest.raises(SpectrumMismatch):
        spherical_function(Euclidean(2), SpectralPoint("sphere", 2), 0.3)
    with pytest.raises(SpectrumMismatch):
        spherical_function(Hyperbolic(2), SpectralPoint("hyperbolic_imag", 0.9), 0.3)
    with pytest.raises(DomainError):
        SpectralPoint("heisenberg_a", 0.0)


def test_grid_invariants():
    g = Hyperbolic(3)
    grid = uniform_grid(g, 4.0, 0.5, imag_points=4)
    assert trivial_point(g) in grid.points
    keys = [p.sort_key() for p in grid.points]
    assert keys == sorted(keys) and len(set(keys)) == len(keys)
    finer = uniform_grid(g, 4.0, 0.25, imag_points=8)
    assert set(grid.points) <= set(finer.points)
    back = SpectralGrid.from_dict(grid.to_dict())
    assert back.points == grid.points


def _triangle():
    return RadialFunction(Euclidean(1), lambda t: np.maximum(0.0, 1 - np.abs(t)), Envelope(0.0, 1.0, 1.0),
                          breakpoints=(1.0,))


def test_transform_examples():
    g = Euclidean(1)
    grid = SpectralGrid(g, (SpectralPoint("euclidean", 0.0), SpectralPoint("euclidean", 2 * math.pi),
                            SpectralPoint("euclidean", 4 * math.pi)))
    vals = transform_on_grid(g, _triangle(), grid)
    assert np.allclose(vals, [1, 0, 0], atol=1e-9)
    assert np.all(transform_on_grid(g, zero_function(g), grid) == 0)
    for lam in (0.5, 3.0, 9.0):
        want = (math.sin(lam / 2) / (lam / 2)) ** 2
        assert spherical_transform(g, _triangle(), SpectralPoint("euclidean", lam)) == pytest.approx(want, abs=1e-9)


def test_sphere_transform_orthogonality():
    g = Sphere(2)
    f = RadialFunction(g, lambda t: specfun.sphere_poly(3, 2, np.cos(np.asarray(t))), None)
    for l in range(8):
        v = spherical_transform(g, f, SpectralPoint("sphere", l))
        if l != 3:
            assert abs(v) < 1e-9
        else:
            assert v == pytest.approx(4 * math.pi / 7, rel=1e-9)


def _battery(geom, k):
    a = 0.6 + 0.3 * k
    if geom.kind == "heisenberg":
        return RadialFunction(geom, lambda t, s: (1 + 0.2 * k * np.asarray(s) ** 2) * np.exp(
            -a * (np.asarray(t) ** 2 + np.asarray(s) ** 4)), Envelope(3.0, 0.5 * a, 0.0))
    if geom.kind == "sphere":
        return RadialFunction(geom, lambda t: np.exp(-a * np.asarray(t) ** 2) * np.cos(k * np.asarray(t)), None)
    amp = 4.0 if geom.kind == "hyperbolic" else 1.0
    return RadialFunction(geom, lambda t: np.exp(-a * np.asarray(t) ** 2) * np.cos(0.5 * k * np.asarray(t)),
                          Envelope(amp, 0.5 * a, 0.0))


@pytest.mark.parametrize("geom", [Euclidean(2), Hyperbolic(2), Hyperbolic(3), Sphere(2), Heisenberg(1)], ids=str)
def test_trivial_character_consistency(geom):
    for k in range(10):
        f = _battery(geom, k)
        a = spherical_transform(geom, f, trivial_point(geom))
        b = trivial_transform(geom, f)
        assert a == pytest.approx(b, rel=1e-8, abs=1e-12)


def test_euclidean_gaussian_transform_closed_form():
    # e^{-π|x|²} is its own Fourier transform at frequency 2π|ξ|
    g = Euclidean(3)
    f = RadialFunction(g, lambda t: np.exp(-math.pi * np.asarray(t) ** 2), Envelope(1.0, math.pi, 0.0))
    for xi in (0.0, 0.4, 1.1):
        v = spherical_transform(g, f, SpectralPoint("euclidean", 2 * math.pi * xi))
        assert v == pytest.approx(math.exp(-math.pi * xi * xi), rel=1e-8)


def test_heisenberg_conjugate_symmetry():
    g = Heisenberg(1)
    f = _battery(g, 2)
    for lam, m in ((0.7, 0), (2.5, 2)):
        a = spherical_transform(g, f, SpectralPoint("heisenberg_a", lam, m))
        b = spherical_transform(g, f, SpectralPoint("heisenberg_a", -lam, m))
        assert a == pytest.approx(b, rel=1e-10, abs=1e-14)


def test_product_formula():
    assert product_formula_residual(0, 0.3, -0.7) < 1e-15
    rng = np.random.default_rng(5)
    for x, y in rng.uniform(-1, 1, (10, 2)):
        assert product_formula_residual(1, x, y) < 1e-10
    assert product_formula_residual(2, 0.3, 0.3) < 1e-8
    for l in range(11):
        assert product_formula_residual(l, 0.2, -0.45) < 1e-8
    with pytest.raises(DomainError):
        product_formula_residual(11, 0.1, 0.1)


@given(lam=st.floats(0, 25), t=st.floats(0, 4))
@settings(max_examples=60, deadline=None)
def test_euclidean_phi_is_normalized_bessel(lam, t):
    v = spherical_function(Euclidean(2), SpectralPoint("euclidean", lam), t)
    assert v == pytest.approx(float(mp.besselj(0, lam * t)), abs=1e-12)
