import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from packlp.errors import DegenerateWitness, DomainError, EnvelopeViolation
from packlp.geometry import (Envelope, Euclidean, Heisenberg, Hyperbolic, RadialFunction, Sphere,
                             ball_volume, bound_ratio, ck_norm, ck_polar, from_config,
                             heisenberg_unit_ball, radial_density, trivial_transform,
                             validate_envelope, zero_function)
from packlp.quadrature import integrate


def gaussian(geom, a=1.0):
    if geom.kind == "hyperbolic":
        # e^{-t²} <= 2 e^{-t²/2} / cosh^{n-1}(t) for n <= 3
        return RadialFunction(geom, lambda t: np.exp(-a * np.asarray(t) ** 2), Envelope(2.0, 0.5 * a, 0.0))
    if geom.kind == "heisenberg":
        return RadialFunction(geom, lambda t, s: np.exp(-a * (np.asarray(t) ** 2 + np.asarray(s) ** 4)),
                              Envelope(1.0, a, 0.0))
    return RadialFunction(geom, lambda t: np.exp(-a * np.asarray(t) ** 2), Envelope(1.0, a, 0.0))


def test_radial_density_examples():
    assert radial_density(Euclidean(1), 3.7) == pytest.approx(2.0)
    t = np.linspace(0, 3, 7)
    assert np.allclose(radial_density(Hyperbolic(2), t), 2 * np.pi * np.sinh(t))
    assert radial_density(Sphere(2), math.pi / 2) == pytest.approx(2 * math.pi)


def test_radial_density_domain():
    with pytest.raises(DomainError):
        radial_density(Euclidean(2), -1.0)
    with pytest.raises(DomainError):
        radial_density(Sphere(2), 4.0)
    with pytest.raises(DomainError):
        radial_density(Heisenberg(1), 1.0)


def test_ball_volume_examples():
    assert ball_volume(Euclidean(1), 0.3) == pytest.approx(0.6)
    assert ball_volume(Hyperbolic(2), 1.3) == pytest.approx(2 * math.pi * (math.cosh(1.3) - 1), rel=1e-14)
    assert ball_volume(Heisenberg(1), 2.0) / ball_volume(Heisenberg(1), 1.0) == pytest.approx(16.0, rel=1e-12)


@pytest.mark.parametrize("geom", [Euclidean(3), Hyperbolic(2), Hyperbolic(4), Sphere(2), Sphere(5)])
def test_ball_volume_integrates_density(geom):
    rng = np.random.default_rng(11)
    top = 3.0 if geom.kind != "sphere" else math.pi
    for r in rng.uniform(0.05, top, 20):
        want = integrate(lambda t: radial_density(geom, t), 0.0, r, rtol=1e-13).value
        assert ball_volume(geom, r) == pytest.approx(float(want), rel=1e-10)


def test_heisenberg_ball_volume_integrates_density():
    # slice the unit CK ball at fixed s: |t| <= sqrt(1 - s⁴)
    from scipy.integrate import quad
    for n in (1, 2):
        g = Heisenberg(n)
        val, _ = quad(lambda s: 2 * math.sqrt(1 - s ** 4) * radial_density(g, 0.0, s), 0.0, 1.0,
                      epsabs=0, epsrel=1e-13)
        assert heisenberg_unit_ball(n) == pytest.approx(val, rel=1e-10)


def test_heisenberg_unit_ball_against_mpmath():
    # C_n = |S^{2n-1}| ∫_{-1}^{1} (1 - t²)^{n/2} / (2n) dt
    for n in (1, 2, 3):
        area = 2 * mp.pi ** n / mp.gamma(n)
        want = area * mp.quad(lambda t: (1 - t * t) ** (mp.mpf(n) / 2), [-1, 1]) / (2 * n)
        assert heisenberg_unit_ball(n) == pytest.approx(float(want), rel=1e-12)


@given(n=st.integers(1, 3), r=st.floats(0.05, 20))
@settings(max_examples=40, deadline=None)
def test_heisenberg_dilation(n, r):
    g = Heisenberg(n)
    assert ball_volume(g, r) / ball_volume(g, 1.0) == pytest.approx(r ** (2 * n + 2), rel=1e-10)


@given(r1=st.floats(0.01, 3.0), r2=st.floats(0.01, 3.0))
@settings(max_examples=40, deadline=None)
def test_ball_volume_increasing(r1, r2):
    lo, hi = sorted((r1, r2))
    for g in (Euclidean(2), Hyperbolic(3), Sphere(3), Heisenberg(1)):
        if hi > lo:
            assert ball_volume(g, hi) > ball_volume(g, lo)


def test_ck_norm_dilation():
    rng = np.random.default_rng(3)
    t, s = rng.normal(size=20), np.abs(rng.normal(size=20))
    for r in (0.3, 2.5):
        assert np.allclose(ck_norm(r * r * t, r * s), r * ck_norm(t, s))
    R, phi = rng.uniform(0, 3, 20), rng.uniform(0, math.pi, 20)
    assert np.allclose(ck_norm(*ck_polar(R, phi)), R)


def test_trivial_transform_examples():
    assert trivial_transform(Euclidean(2), zero_function(Euclidean(2))) == 0.0
    tri = RadialFunction(Euclidean(1), lambda t: np.maximum(0.0, 1 - np.abs(t)), Envelope(0.0, 1.0, 1.0),
                         breakpoints=(1.0,))
    assert trivial_transform(Euclidean(1), tri) == pytest.approx(1.0, abs=1e-12)
    mp.mp.dps = 30
    want = 4 * mp.pi * mp.quad(lambda t: mp.exp(-t * t) * mp.sinh(t) ** 2, [0, mp.inf])
    assert trivial_transform(Hyperbolic(3), gaussian(Hyperbolic(3))) == pytest.approx(float(want), rel=1e-9)


def test_trivial_transform_heisenberg():
    # ∫∫ e^{-t² - s⁴} 2π s dt ds = 2π·√π·(√π/4)
    want = 2 * math.pi * math.sqrt(math.pi) * math.sqrt(math.pi) / 4
    assert trivial_transform(Heisenberg(1), gaussian(Heisenberg(1))) == pytest.approx(want, rel=1e-8)


@pytest.mark.parametrize("c", [0.1, 3.0, 7.0])
def test_measure_scale_cancels_in_bound(c):
    for g in (Euclidean(2), Hyperbolic(3), Heisenberg(1)):
        f = gaussian(g)
        gs = g.with_scale(c)
        fs = gaussian(gs)
        b1 = bound_ratio(g, 0.4, 1.0, trivial_transform(g, f))
        b2 = bound_ratio(gs, 0.4, 1.0, trivial_transform(gs, fs))
        assert ball_volume(gs, 0.4) == pytest.approx(c * ball_volume(g, 0.4), rel=1e-13)
        assert b2 == pytest.approx(b1, rel=1e-10)


def test_bound_ratio_degenerate():
    with pytest.raises(DegenerateWitness):
        bound_ratio(Euclidean(1), 0.5, 1.0, 0.0)


def test_envelope_validation():
    g = Euclidean(1)
    ok = RadialFunction(g, lambda t: np.exp(-np.asarray(t) ** 2), Envelope(1.0, 0.9, 0.0))
    validate_envelope(ok)
    bad = RadialFunction(g, lambda t: np.exp(-np.asarray(t) ** 2), Envelope(1.0, 2.0, 0.0))
    with pytest.raises(EnvelopeViolation):
        validate_envelope(bad)
    with pytest.raises(DomainError):
        RadialFunction(g, lambda t: t)
    with pytest.raises(DomainError):
        Envelope(1.0, 0.0, 0.0)


def test_config_roundtrip():
    for g in (Euclidean(3, 2.0), Hyperbolic(2), Sphere(4), Heisenberg(2, 0.5)):
        assert from_config(g.to_config()) == g


def test_geometry_rejects_bad_dimension():
    with pytest.raises(DomainError):
        Hyperbolic(1)
    with pytest.raises(DomainError):
        Sphere(1)
    with pytest.raises(DomainError):
        Euclidean(0)
