import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from faddeev.discretization import (Grid2D, RadialField, SplineBasis1D, alpha_density, blended_knots,
                                     build_alpha_grid, build_rho_grid, interpolate, resample)


def _poisson_error(n):
    # -u'' = pi^2 sin(pi x) on [0, 1], u(0) = u(1) = 0
    b = SplineBasis1D(np.linspace(0, 1, n + 1)).with_dirichlet(True, True)
    pts = b.collocation_points()
    c = np.linalg.solve(-b.matrix(pts, 2), np.pi**2 * np.sin(np.pi * pts))
    x = np.linspace(0, 1, 401)
    return np.max(np.abs(b.evaluate(c, x) - np.sin(np.pi * x)))


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=4, max_size=4))
def test_hermite_interpolation_is_exact_for_cubics(a):
    p = np.polynomial.Polynomial(a)
    b = SplineBasis1D(np.array([0.0, 0.3, 1.1, 2.0]))
    c = b.hermite_coefficients(p(b.knots), p.deriv()(b.knots))
    x = np.linspace(0, 2, 37)
    assert np.allclose(b.evaluate(c, x), p(x), atol=1e-10)
    assert np.allclose(b.evaluate(c, x, 2), p.deriv(2)(x), atol=1e-8)


def test_integral_matrix_is_exact():
    p = np.polynomial.Polynomial([1.0, -2.0, 0.5, 0.25])
    b = SplineBasis1D(np.linspace(0, 2, 5))
    c = b.hermite_coefficients(p(b.knots), p.deriv()(b.knots))
    t = np.array([0.3, 1.0, 1.7, 2.0])
    assert np.allclose(b.integral_matrix(t) @ c, p.integ()(t) - p.integ()(0))


def test_collocation_converges_at_fourth_order():
    e1, e2 = _poisson_error(8), _poisson_error(16)
    assert 12 < e1 / e2 < 20


def test_log_derivative_boundary():
    b = SplineBasis1D(np.linspace(0, 1, 5)).with_log_derivative(-2.5)
    c = np.random.default_rng(0).normal(size=b.size)
    assert b.evaluate(c, [1.0], 1)[0] == pytest.approx(-2.5 * b.evaluate(c, [1.0])[0])


def test_dirichlet_basis_vanishes_at_ends():
    b = SplineBasis1D(np.linspace(0, 1, 5)).with_dirichlet(True, True)
    assert np.allclose(b.matrix([0.0, 1.0]), 0.0)
    assert b.size == 2 * 5 - 2


def test_invalid_knots_and_points():
    with pytest.raises(ValueError):
        SplineBasis1D(np.array([0.0, 1.0, 0.5]))
    with pytest.raises(ValueError):
        SplineBasis1D(np.linspace(0, 1, 3)).matrix([1.5])
    with pytest.raises(ValueError):
        build_rho_grid(10.0, 7)
    with pytest.raises(ValueError):
        build_alpha_grid(10)


def test_blended_knots_grow_and_span():
    k = blended_knots(10.0, 20)
    assert k[0] == 0 and k[-1] == 10.0
    assert np.all(np.diff(np.diff(k)) >= -1e-12)


def test_rho_grid_size_and_regularity():
    b = build_rho_grid(10.0, 32)
    assert b.size == 32 + 1  # outer derivative removed later by the boundary condition
    assert np.allclose(b.matrix([0.0]), 0.0)


def test_alpha_grid_concentrates_near_bound_region(desk_setup):
    ab = desk_setup.grid.alpha
    assert ab.size == desk_setup.config.n_alpha
    assert (ab.lo, ab.hi) == (0.0, pytest.approx(np.pi / 2))
    h = np.diff(ab.knots)
    assert h[-1] < h[0]
    a = np.linspace(0, np.pi / 2, 400)
    dens = alpha_density(a, desk_setup.deuteron, desk_setup.rho_max)
    assert np.all(dens >= 1.0)


def test_radial_field_local_evaluation_matches_dense():
    rho = build_rho_grid(5.0, 16)
    ab = build_alpha_grid(16)
    grid = Grid2D(rho, ab)
    rng = np.random.default_rng(3)
    coeffs = rng.normal(size=(rho.size, 2, ab.size))
    f = RadialField(grid, coeffs)
    r = rng.uniform(0, 5, 40)
    a = rng.uniform(0, np.pi / 2, 40)
    dense = interpolate(grid, coeffs.transpose(0, 2, 1), r, a)
    assert np.allclose(f(r, a), dense)
    assert np.allclose(resample(grid, coeffs.transpose(0, 2, 1), r[:3], a[:4])[1, 2], f(r[1], a[2]))
    with pytest.raises(ValueError):
        f(6.0, 0.1)
