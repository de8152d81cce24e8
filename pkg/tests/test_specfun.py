import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from faddeev import specfun


def test_riccati_s_wave_closed_forms():
    z = np.linspace(0.1, 20, 50)
    assert np.allclose(specfun.riccati_j(0, z), np.sin(z))
    assert np.allclose(specfun.riccati_y(0, z), -np.cos(z))
    assert np.allclose(specfun.outgoing_riccati(0, z), np.exp(1j * z))


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 4), st.floats(0.5, 40))
def test_riccati_wronskian(ell, z):
    w = specfun.riccati_j(ell, z) * specfun.riccati_y_prime(ell, z) - specfun.riccati_j_prime(ell, z) * specfun.riccati_y(ell, z)
    assert w == pytest.approx(1.0, rel=1e-9)


@settings(max_examples=50, deadline=None)
@given(st.sampled_from([0, 2, 4, 8]), st.floats(0.5, 60))
def test_cylindrical_wronskian(nu, z):
    # J H' - J' H = 2i / (pi z)
    w = specfun.bessel_J(nu, z) * specfun.hankel_plus_prime(nu, z) - specfun.bessel_J_prime(nu, z) * specfun.hankel_plus(nu, z)
    assert w == pytest.approx(2j / (np.pi * z), rel=1e-8)


def test_outgoing_hankel_asymptotics():
    z = 400.0
    ref = np.sqrt(2 / (np.pi * z)) * np.exp(1j * (z + np.pi / 4))
    assert specfun.outgoing_hankel0(z) == pytest.approx(ref, rel=1e-3)


def test_positive_argument_required():
    with pytest.raises(ValueError):
        specfun.riccati_y(0, 0.0)
    with pytest.raises(ValueError):
        specfun.outgoing_hankel0(-1.0)


def test_delves_swave_value_at_quarter_pi():
    assert specfun.delves_swave(0, np.pi / 4) == pytest.approx(2 / np.sqrt(np.pi))


@pytest.mark.parametrize("n", [0, 1, 2, 5])
def test_delves_swave_matches_general_form_up_to_sign(n):
    a = np.linspace(0.05, 1.5, 31)
    g = specfun.delves(specfun.DelvesIndex(0, 0, n), a)
    s = specfun.delves_swave(n, a)
    assert np.allclose(np.abs(g), np.abs(s), atol=1e-12)


@pytest.mark.parametrize("idx", [specfun.DelvesIndex(0, 0, 0), specfun.DelvesIndex(1, 2, 3), specfun.DelvesIndex(2, 0, 1)])
def test_delves_normalized_and_eigenfunction(idx):
    f = lambda a: specfun.delves(idx, a) ** 2
    assert integrate.quad(f, 0, np.pi / 2, limit=200)[0] == pytest.approx(1.0, rel=1e-10)
    a = np.linspace(0.2, 1.3, 7)
    h = 1e-4
    d2 = (specfun.delves(idx, a + h) - 2 * specfun.delves(idx, a) + specfun.delves(idx, a - h)) / h**2
    lhs = -d2 + (idx.ell * (idx.ell + 1) / np.cos(a) ** 2 + idx.lam * (idx.lam + 1) / np.sin(a) ** 2) * specfun.delves(idx, a)
    assert np.allclose(lhs, idx.nu**2 * specfun.delves(idx, a), rtol=1e-5, atol=1e-5)


def test_delves_orthogonality():
    v = integrate.quad(lambda a: specfun.delves_swave(0, a) * specfun.delves_swave(1, a), 0, np.pi / 2)[0]
    assert abs(v) < 1e-12


def test_delves_index_rejects_negative():
    with pytest.raises(ValueError):
        specfun.DelvesIndex(-1, 0, 0)


def test_jacobi_poly_against_scipy():
    from scipy.special import eval_jacobi
    t = np.linspace(-1, 1, 11)
    for n in range(6):
        assert np.allclose(specfun.jacobi_poly(n, 0.5, 1.5, t), eval_jacobi(n, 0.5, 1.5, t))
