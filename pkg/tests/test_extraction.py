from types import SimpleNamespace

import numpy as np
import pytest

from faddeev import extraction as X
from faddeev import specfun
from faddeev.discretization import build_alpha_grid


def test_lstsq_recovers_coefficients_and_rejects_degenerate_design():
    t = np.linspace(0, 1, 30)
    A = np.column_stack([np.ones_like(t), t]).astype(complex)
    c, res, cond = X.lstsq_qr(A, 2 - 3j * t)
    assert np.allclose(c, [2, -3j]) and res < 1e-12 and cond > 1
    with pytest.raises(X.IllConditionedFitError):
        X.lstsq_qr(np.column_stack([t, t]).astype(complex), t)


def test_plane_wave_fit_below_breakup():
    q, y = 1.2, np.linspace(20, 30, 60)
    g = 0.3 * specfun.riccati_j(0, q * y) + (0.1 - 0.2j) * specfun.outgoing_riccati(0, q * y)
    fit = X.fit_plane_wave(g, y, q)
    assert fit.c1 == pytest.approx(0.3) and fit.c2 == pytest.approx(0.1 - 0.2j)
    assert fit.c3 is None and fit.residual < 1e-12


def test_above_breakup_fit_needs_projection_data():
    with pytest.raises(ValueError):
        X.fit_plane_wave(np.ones(5), np.linspace(1, 2, 5), 1.0, k=1.0)


def _field(fun, knots):
    return SimpleNamespace(grid=SimpleNamespace(alpha=SimpleNamespace(knots=knots)), __call__=fun)


class _Field:
    def __init__(self, fun, knots):
        self.fun = fun
        self.grid = SimpleNamespace(alpha=SimpleNamespace(knots=knots))

    def __call__(self, rho, alpha):
        return self.fun(rho, alpha)[..., None]


def test_delves_extraction_recovers_mode_amplitudes():
    k = 1.1
    b = {0: 0.7 - 0.2j, 1: -0.3j, 2: 0.1}
    a = {0: 0.05, 1: 0.0, 2: -0.02j}

    def v(rho, alpha):
        out = 0
        for n in b:
            nu = 2 * (n + 1)
            radial = a[n] * specfun.bessel_J(nu, k * rho) + b[n] * 1j * specfun.hankel_plus(nu, k * rho)
            out = out + (-1) ** (nu // 2) * radial * specfun.delves_swave(n, alpha)
        return out

    ab = build_alpha_grid(64)
    nodes = ab.collocation_points()
    br = X.extract_breakup(_Field(v, ab.knots), 0, k, nodes, (12.0, 16.0))
    T = sum(b[n] * specfun.delves_swave(n, nodes) for n in b)
    C = sum(a[n] * specfun.delves_swave(n, nodes) for n in a)
    assert np.allclose(br.T, T, atol=1e-9)
    assert np.allclose(br.C, C, atol=1e-9)
    assert br.residual.size == int(k * 12.0) // 2


def test_per_angle_extraction_recovers_amplitudes():
    k = 2.0
    T = lambda a: np.sin(2 * a) * (1 + 1j * a)
    C = lambda a: 0.01 * np.sin(4 * a)
    v = lambda r, a: C(a) * specfun.bessel_J(0, k * r) + T(a) * specfun.outgoing_hankel0(k * r)
    nodes = np.linspace(0.1, 1.4, 9)
    br = X.extract_breakup(_Field(v, np.linspace(0, np.pi / 2, 5)), 0, k, nodes, (10.0, 14.0), method="per_angle")
    assert np.allclose(br.T, T(nodes)) and np.allclose(br.C, C(nodes), atol=1e-12)
    with pytest.raises(ValueError):
        X.extract_breakup(_Field(v, np.linspace(0, 1, 3)), 0, k, nodes, (10.0, 14.0), method="other")


def test_breakup_amplitude_ratio_and_combine():
    a = np.linspace(0.1, 1.5, 8)
    br = X.BreakupAmplitude(a, np.ones(8), np.where(a > 1.2, 1.0, 0.01), np.zeros(1))
    assert br.regular_ratio(1.2) == pytest.approx(0.01)
    assert br.regular_ratio() == pytest.approx(1.0)
    both = br.combine(br, 2.0, -1.0)
    assert np.allclose(both.T, 1.0)


def test_critical_angle_and_box():
    assert X.critical_angle(0.0, 0.15, 10.0) == pytest.approx(np.pi / 2)
    assert X.critical_angle(5.0, 0.15, 10.0) < np.pi / 2
    assert X.inscribed_box(5.0, 3.0) == (3.0, pytest.approx(4.0))
    with pytest.raises(ValueError):
        X.inscribed_box(5.0, 6.0)


def test_x_quadrature_integrates_polynomials():
    x, w = X.x_quadrature(2.0, 4)
    assert np.sum(w * x**5) == pytest.approx(2.0**6 / 6)


def test_flux_factors_and_reduced_mass_matrix(desk_setup):
    F = X.flux_factors(1.5, 2)
    assert np.allclose(F, [3.0, 4 / np.pi, 4 / np.pi])
    mu = X.reduced_mass_matrix(desk_setup.ms, 2)
    assert mu.shape == (3, 3) and np.allclose(mu[1:, 1:], 1.0)
    assert mu[0, 1] * mu[1, 0] == pytest.approx(1.0)


def test_scatter_energy_below_breakup(desk_setup):
    res = X.scatter_energy(desk_setup, -1.0)
    assert res.S.rows == 1 and res.S.p == 0
    assert res.defects.eta_U <= 1e-3
    assert res.E_lab == pytest.approx(1.5 * (-1.0 - desk_setup.deuteron.energy))


def test_scatter_energy_rejects_bad_selectors(desk_setup):
    with pytest.raises(ValueError):
        X.scatter_energy(desk_setup, 1.0, ("nd", "xyz"))
    with pytest.raises(ValueError):
        X.scatter_energy(desk_setup, 1.0, ("nd", "nnp:3"))


def test_energy_result_files(desk_setup, tmp_path):
    res = X.scatter_energy(desk_setup, -0.5)
    paths = res.write(tmp_path)
    assert [p.name for p in paths] == ["smatrix_E-0.500000.json"]
    rec = __import__("json").loads(paths[0].read_text())
    assert rec["S11"] == [res.S11.real, res.S11.imag]


def test_scatter_energy_nd_only_above_breakup(desk_setup):
    res = X.scatter_energy(desk_setup, 7.17, ("nd",))
    assert res.S.rows == 1 and res.defects is None
    assert 0.3 < abs(res.S11) < 0.7
