import math

import numpy as np
import pytest

from conftest import euclid_certified
from packlp.bases import LaguerreGaussBasis, SphereHarmonicBasis, TentBasis, make_basis
from packlp.errors import DegenerateWitness, GridError, SpectrumMismatch
from packlp.geometry import Envelope, Euclidean, Hyperbolic, RadialFunction, Sphere, ball_volume, zero_function
from packlp.pointprocess import LatticeSpec, lattice_density, min_distance
from packlp.spectra import SpectralGrid, SpectralPoint
from packlp.witness_lp import (LPInstance, bound_from_witness, build_lp, delsarte_code_bound, lp_bound,
                               make_spatial_grid, solve_lp)


def _lp(c, A_eq, b_eq, A_ub=None, b_ub=None, bounds=None):
    A_ub = np.zeros((0, len(c))) if A_ub is None else np.asarray(A_ub, float)
    b_ub = np.zeros(0) if b_ub is None else np.asarray(b_ub, float)
    return LPInstance(np.asarray(c, float), np.asarray(A_eq, float), np.asarray(b_eq, float), A_ub, b_ub, bounds)


def test_solve_equality_only():
    sol = solve_lp(_lp([2.0], [[4.0]], [1.0]))
    assert sol.optimal and sol.coefficients[0] == 0.25


def test_solve_infeasible_toy():
    # x <= -1 and x >= 0
    sol = solve_lp(_lp([1.0], [[0.0]], [0.0], [[1.0], [-1.0]], [-1.0, 0.0]))
    assert sol.status == "infeasible"


def test_solve_hand_checked_vertex():
    # min -x - 2y  s.t. x + y = 4, x - y <= 2, y <= 3, x >= 0  ->  (1, 3), objective -7
    sol = solve_lp(_lp([-1, -2], [[1, 1]], [4], [[1, -1], [0, 1], [-1, 0]], [2, 3, 0]))
    assert sol.optimal
    assert np.allclose(sol.coefficients, [1, 3], atol=1e-12)
    assert sol.objective == pytest.approx(-7)
    assert sol.residual <= 1e-9


def test_solve_unbounded():
    sol = solve_lp(_lp([1, -1], [[1, 1]], [1]))
    assert sol.status == "unbounded"


def test_single_gaussian_is_infeasible():
    g = Euclidean(1)
    sol, bound, _ = lp_bound(g, 0.5, LaguerreGaussBasis(g, 0, 1.1))
    assert sol.status == "infeasible" and math.isnan(bound)


def test_tent_lp_gives_one():
    g = Euclidean(1)
    sol, bound, lp = lp_bound(g, 0.5, TentBasis(g, 8, 0.5))
    assert sol.optimal
    assert sol.objective == pytest.approx(1.0, abs=1e-12)
    assert bound == pytest.approx(1.0, abs=1e-9)
    assert lp.metadata["spectral_points"] > 0 and lp.metadata["spatial_points"] > 0


def test_sphere_lp_matches_delsarte():
    g = Sphere(2)
    b = SphereHarmonicBasis(g, 10)
    sol, _, _ = lp_bound(g, math.pi / 6, b)
    assert sol.optimal
    code = b.volume * sol.objective
    assert code == pytest.approx(delsarte_code_bound(2, math.pi / 3, 10), rel=1e-4)


def test_build_lp_grid_errors():
    g = Hyperbolic(3)
    basis = make_basis(g, "gauss_poly", 8, r=0.5)
    real_only = SpectralGrid(g, (SpectralPoint("hyperbolic_real", 1.0),))
    # the trivial character is imaginary; an otherwise real grid lacks the segment samples
    with pytest.raises(GridError):
        build_lp(g, 0.5, basis, SpectralGrid(g, (SpectralPoint("hyperbolic_real", 1.0),)).union([]),
                 make_spatial_grid(basis, 0.5, extent=0.5 * basis.spatial_extent(0.5)))
    with pytest.raises(SpectrumMismatch):
        build_lp(Euclidean(2), 0.5, basis, real_only)


def test_spatial_grid_covers_forbidden_region():
    g = Euclidean(2)
    b = LaguerreGaussBasis(g, 12, 1.1)
    sg = make_spatial_grid(b, 0.5)
    assert sg.points[0] == pytest.approx(1.0)
    assert sg.points[-1] >= b.spatial_extent(0.5) - sg.spacing
    assert np.max(np.diff(sg.points)) <= sg.spacing + 1e-12
    finer = make_spatial_grid(b, 0.5, refinement=1)
    assert np.all(np.isin(np.round(sg.points, 12), np.round(finer.points, 12)))


def test_bound_from_witness_triangle():
    g = Euclidean(1)
    tri = RadialFunction(g, lambda t: np.maximum(0.0, 1 - np.abs(t)), Envelope(0.0, 1.0, 1.0), breakpoints=(1.0,))
    out = bound_from_witness(g, 0.5, tri)
    assert out["bound"] == pytest.approx(1.0, abs=1e-9)
    assert out["ball_volume"] == pytest.approx(1.0)


def test_bound_from_witness_degenerate():
    g = Euclidean(1)
    with pytest.raises(DegenerateWitness):
        bound_from_witness(g, 0.5, zero_function(g))
    negative = RadialFunction(g, lambda t: -np.exp(-np.asarray(t) ** 2), Envelope(1.0, 1.0, 0.0))
    with pytest.raises(DegenerateWitness):
        bound_from_witness(g, 0.5, negative)


def test_bound_from_witness_sphere_code_form(witness):
    cert, bound, _ = witness("s2")
    out = bound_from_witness(Sphere(2), cert.r, cert.function)
    ratio = 4 * math.pi / ball_volume(Sphere(2), cert.r)
    assert out["code_bound"] == pytest.approx(out["bound"] * ratio, rel=1e-12)


def test_hyperbolic_bound_is_finite(witness):
    cert, bound, _ = witness("h3")
    assert 0 < bound < math.inf


def test_delsarte_examples():
    b10 = delsarte_code_bound(2, math.pi / 3, 10)
    assert 13.0 <= b10 <= 13.2
    assert delsarte_code_bound(2, math.pi + 1e-9, 3) >= 1
    assert delsarte_code_bound(2, math.pi / 3, 1) >= b10


def test_delsarte_monotone_in_degree():
    vals = [delsarte_code_bound(3, math.pi / 3, L) for L in (2, 4, 6, 8, 10)]
    assert all(b >= a - 1e-9 * a for a, b in zip(vals[1:], vals[:-1]))


@pytest.mark.parametrize("setup", ["e2", "s2", "h3"])
def test_nested_grids_monotone(setup):
    from conftest import WITNESS_SETUPS
    geom, r, make = WITNESS_SETUPS[setup]
    basis = make(geom)
    h0 = basis.default_spatial_spacing(r)
    objs = []
    for ref in range(3):
        grid = basis.default_spectral_grid(refinement=ref)
        sg = make_spatial_grid(basis, r, spacing=4 * h0 / 2 ** ref)
        sol, _, _ = lp_bound(geom, r, basis, grid, sg)
        assert sol.optimal
        objs.append(sol.objective)
    assert all(b >= a * (1 - 1e-9) for a, b in zip(objs, objs[1:]))


class _Scaled:
    """The basis with every element multiplied by c."""

    def __init__(self, inner, c):
        self._inner, self._c = inner, c

    def __getattr__(self, name):
        return getattr(self._inner, name)

    def values(self, t):
        return self._c * self._inner.values(t)

    def value_at_identity(self):
        return self._c * np.asarray(self._inner.value_at_identity())

    def trivial_row(self):
        return self._c * np.asarray(self._inner.trivial_row())

    def transform(self, pts):
        return self._c * self._inner.transform(pts)


@pytest.mark.parametrize("c", [1e-3, 2.0, 1e3])
def test_normalization_invariance(c):
    g = Euclidean(2)
    b = LaguerreGaussBasis(g, 16, 1.1)
    s1, _, _ = lp_bound(g, 0.5, b)
    s2, _, _ = lp_bound(g, 0.5, _Scaled(b, c))
    assert s2.objective == pytest.approx(s1.objective, rel=1e-8)


@pytest.mark.parametrize("c", [0.5, 3.0])
def test_euclidean_scale_covariance(c):
    g = Euclidean(2)
    _, b1, _ = lp_bound(g, 0.5, LaguerreGaussBasis(g, 16, 1.1))
    _, b2, _ = lp_bound(g, 0.5 * c, LaguerreGaussBasis(g, 16, 1.1 * c))
    assert b2 == pytest.approx(b1, rel=1e-6)


LATTICES = [("Z:1", 1), ("Z:2", 2), ("Z:3", 3), ("Z:4", 4), ("A2", 2), ("D4", 4), ("E8", 8)]


@pytest.mark.parametrize("name,n", LATTICES)
def test_bound_dominates_lattice_density(name, n):
    lat = LatticeSpec.from_name(name)
    r = min_distance(lat) / 2
    cert, bound = euclid_certified(n, r)
    assert cert.certified
    assert lattice_density(lat) < bound
