import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import optimize

from packlp import specfun
from packlp.errors import AccuracyLoss, DomainError, ParameterPole

mp.mp.dps = 30


# -- 2F1 -------------------------------------------------------------------

def test_2f1_b_zero_is_one():
    z = -np.linspace(0, 50, 11)
    assert np.allclose(specfun.gauss_2f1(0.7 + 2j, 0.0, 1.5, z), 1.0, atol=1e-15)


def test_2f1_log_identity():
    z = -np.concatenate([np.linspace(0.01, 0.5, 10), np.linspace(1, 200, 20)])
    got = np.real(specfun.gauss_2f1(1, 1, 2, z))
    want = -np.log1p(-z) / z
    assert np.max(np.abs(got / want - 1)) < 1e-11


def test_2f1_trivial_character_of_hyperbolic_space():
    for n in (2, 3, 5, 8):
        rho = 0.5 * (n - 1)
        t = np.linspace(0, 6, 13)
        v = specfun.gauss_2f1(rho, 0.0, n / 2, -np.sinh(t) ** 2)
        assert np.max(np.abs(v - 1)) < 1e-14


@pytest.mark.parametrize("a,b,c", [(0.5 + 3j, 0.5 - 3j, 1.0), (1 + 0.2j, 1 - 0.2j, 1.5),
                                   (0.25, 1.75, 2.0), (2.0, 2.0, 3.5), (1.0 + 7j, 1.0 - 7j, 1.5)])
def test_2f1_against_mpmath(a, b, c):
    for z in (-0.3, -2.0, -17.0, -400.0, -1e5):
        want = complex(mp.hyp2f1(a, b, c, z))
        got = complex(specfun.gauss_2f1(a, b, c, np.array([z]))[0])
        assert abs(got - want) <= 1e-9 * max(1.0, abs(want))


@given(k=st.integers(0, 8), b=st.floats(-3, 3), c=st.floats(0.3, 4), z=st.floats(-30, 0))
@settings(max_examples=60, deadline=None)
def test_2f1_terminating_matches_polynomial(k, b, c, z):
    got = complex(specfun.gauss_2f1(-k, b, c, np.array([z]))[0])
    term, total = 1.0, 1.0
    for j in range(k):
        term *= (-k + j) * (b + j) / ((c + j) * (j + 1)) * z
        total += term
    assert abs(got - total) <= 1e-12 * max(1.0, abs(total)) * (1 + abs(z)) ** k


def test_2f1_rejects_bad_input():
    with pytest.raises(DomainError):
        specfun.gauss_2f1(float("nan"), 1, 2, np.array([-1.0]))
    with pytest.raises((ParameterPole, DomainError)):
        specfun.gauss_2f1(1, 1, -2.0, np.array([-1.0]))
    with pytest.raises(DomainError):
        specfun.gauss_2f1(1, 1, 2, np.array([0.5]))


def test_2f1_with_error_reports_estimate():
    val, err = specfun.hyp2f1_with_error(0.5 + 2j, 0.5 - 2j, 1.5, np.array([-3.0, -30.0]))
    assert np.all(np.asarray(err) >= 0)
    assert np.all(np.asarray(err) < 1e-10 * np.maximum(np.abs(val), 1e-300) + 1e-14)


def test_2f1_accuracy_loss_is_raised_not_swallowed():
    # an unreachable tolerance must surface as AccuracyLoss
    with pytest.raises(AccuracyLoss):
        specfun.gauss_2f1(0.5 + 40j, 0.5 - 40j, 1.5, np.array([-1e6]), rtol=1e-30)


# -- Bessel ----------------------------------------------------------------

def test_j0_at_zero():
    assert specfun.bessel_j(0, 0.0) == 1.0


def test_j_half_closed_form():
    for x in (0.5, 1.0, 2.0):
        assert specfun.bessel_j(0.5, x) == pytest.approx(math.sqrt(2 / (math.pi * x)) * math.sin(x), rel=1e-14)


def test_first_zero_of_j0():
    z = optimize.brentq(lambda x: specfun.bessel_j(0, x), 2, 3, xtol=1e-14)
    assert z == pytest.approx(2.404825557695773, abs=1e-10)


@given(nu=st.floats(0, 6), x=st.floats(0, 40))
@settings(max_examples=80, deadline=None)
def test_bessel_against_mpmath(nu, x):
    assert specfun.bessel_j(nu, x) == pytest.approx(float(mp.besselj(nu, x)), abs=1e-13)


@given(nu=st.floats(-0.5, 6), x=st.floats(0, 60))
@settings(max_examples=80, deadline=None)
def test_bessel_ratio_bounded_by_one(nu, x):
    # normalized Bessel functions are positive definite spherical functions
    assert abs(specfun.bessel_ratio(nu, x)) <= 1 + 1e-12


def test_bessel_domain():
    with pytest.raises(DomainError):
        specfun.bessel_j(-1, 1.0)
    with pytest.raises(DomainError):
        specfun.bessel_j(0, -1.0)


# -- Laguerre ---------------------------------------------------------------

@given(m=st.integers(0, 40), alpha=st.floats(-0.9, 8))
@settings(max_examples=60, deadline=None)
def test_laguerre_norm_is_one_at_zero(m, alpha):
    assert specfun.laguerre_norm(m, alpha, 0.0) == 1.0


def test_laguerre_degree_zero_and_one():
    x = np.linspace(0, 10, 11)
    assert np.all(specfun.laguerre_norm(0, 2.0, x) == 1.0)
    for n in (1, 2, 5):
        assert np.allclose(specfun.laguerre_norm(1, n - 1, x), 1 - x / n, atol=1e-14)
    assert specfun.laguerre_norm(5, 2, 0.0) == 1.0


@pytest.mark.parametrize("m", [3, 12, 20, 21, 35])
def test_laguerre_against_mpmath(m):
    alpha = 1.0
    for x in (0.3, 2.0, 9.0, 25.0):
        want = float(mp.laguerre(m, alpha, x) / mp.laguerre(m, alpha, 0))
        assert specfun.laguerre_norm(m, alpha, x) == pytest.approx(want, rel=1e-9, abs=1e-12)


def test_laguerre_sum_and_recurrence_agree_at_switch():
    x = np.linspace(0, 15, 31)
    tab = specfun.laguerre_table(20, 2.0, x)
    assert np.allclose(tab[20], specfun.laguerre_norm(20, 2.0, x), rtol=1e-9, atol=1e-12)


# -- sphere polynomials -------------------------------------------------------

def test_sphere_poly_examples():
    x = np.linspace(-1, 1, 9)
    assert np.all(specfun.sphere_poly(0, 3, x) == 1.0)
    assert np.allclose(specfun.sphere_poly(1, 2, x), x, atol=1e-15)
    nodes, w = np.polynomial.legendre.leggauss(30)
    assert abs(np.sum(w * specfun.sphere_poly(2, 2, nodes) * specfun.sphere_poly(3, 2, nodes))) < 1e-12


@given(l=st.integers(0, 60), n=st.integers(2, 9))
@settings(max_examples=60, deadline=None)
def test_sphere_poly_one_at_north_pole(l, n):
    assert abs(specfun.sphere_poly(l, n, 1.0) - 1.0) < 1e-14


@pytest.mark.parametrize("n", [2, 3, 4])
def test_sphere_poly_orthogonality(n):
    # Gauss-Jacobi nodes for the weight (1 - x^2)^((n-2)/2)
    from scipy.special import roots_jacobi
    a = 0.5 * (n - 2)
    x, w = roots_jacobi(24, a, a)
    tab = specfun.gegenbauer_table(10, n, x)
    gram = (tab * w) @ tab.T
    off = gram - np.diag(np.diag(gram))
    assert np.max(np.abs(off)) < 1e-10


def test_sphere_poly_matches_mpmath_gegenbauer():
    for n in (2, 3, 6):
        lam = 0.5 * (n - 1)
        for l in (2, 7):
            for x in (-0.8, 0.1, 0.6):
                want = float(mp.gegenbauer(l, lam, x) / mp.gegenbauer(l, lam, 1))
                assert specfun.sphere_poly(l, n, x) == pytest.approx(want, abs=1e-13)


def test_sphere_hypergeometric_uses_half_angle():
    # φ_l(cos θ) = 2F1(-l, l+n-1; n/2; sin²(θ/2)); the sin²θ argument fails
    n, l, th = 2, 1, 0.9
    half = float(mp.hyp2f1(-l, l + n - 1, n / 2, math.sin(th / 2) ** 2))
    full = float(mp.hyp2f1(-l, l + n - 1, n / 2, math.sin(th) ** 2))
    v = specfun.sphere_poly(l, n, math.cos(th))
    assert v == pytest.approx(half, abs=1e-14)
    assert abs(v - full) > 0.1


def test_sphere_dimension():
    assert [specfun.sphere_dimension(l, 2) for l in range(4)] == [1, 3, 5, 7]
    assert specfun.sphere_dimension(2, 3) == 9
