"""Special functions used for channel functions and angular eigenfunctions.

Cylindrical and spherical Bessel functions come from :mod:`scipy.special`.
Jacobi polynomials and the Delves functions (eigenfunctions of the hyperangular
operator on ``[0, pi/2]``) are evaluated here.

Phase conventions
-----------------
``riccati_h_plus(l, z) = z (j_l(z) + i y_l(z))`` so that ``h+ = -i exp(iz)`` for
``l = 0``, and ``hankel_plus`` is the standard ``H^(1)``. The scattering code
uses the rotated outgoing waves :func:`outgoing_riccati` and
:func:`outgoing_hankel0`, which make ``S = 1 + 2iT``.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import lgamma

import numpy as np
from scipy import special


def _positive(z, name: str) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    if np.any(z <= 0):
        raise ValueError(f"{name} requires z > 0")
    return z


def riccati_j(ell: int, z):
    """Riccati-Bessel ``z j_l(z)`` (``sin z`` for ``l = 0``)."""
    z = np.asarray(z, dtype=float)
    return z * special.spherical_jn(ell, z)


def riccati_j_prime(ell: int, z):
    z = np.asarray(z, dtype=float)
    return special.spherical_jn(ell, z) + z * special.spherical_jn(ell, z, derivative=True)


def riccati_y(ell: int, z):
    """Riccati-Neumann ``z y_l(z)`` (``-cos z`` for ``l = 0``)."""
    z = _positive(z, "riccati_y")
    return z * special.spherical_yn(ell, z)


def riccati_y_prime(ell: int, z):
    z = _positive(z, "riccati_y_prime")
    return special.spherical_yn(ell, z) + z * special.spherical_yn(ell, z, derivative=True)


def riccati_h_plus(ell: int, z):
    return riccati_j(ell, _positive(z, "riccati_h_plus")) + 1j * riccati_y(ell, z)


def riccati_h_plus_prime(ell: int, z):
    return riccati_j_prime(ell, _positive(z, "riccati_h_plus_prime")) + 1j * riccati_y_prime(ell, z)


def bessel_J(nu: float, z):
    return special.jv(nu, np.asarray(z, dtype=float))


def bessel_J_prime(nu: float, z):
    return special.jvp(nu, np.asarray(z, dtype=float))


def hankel_plus(nu: float, z):
    """Outgoing cylindrical Hankel function ``H^(1)_nu(z) = J_nu + i Y_nu``."""
    return special.hankel1(nu, _positive(z, "hankel_plus"))


def hankel_plus_prime(nu: float, z):
    return special.h1vp(nu, _positive(z, "hankel_plus_prime"))


def outgoing_riccati(ell: int, z):
    """``i h+_l(z)``; equals ``exp(iz)`` for ``l = 0``."""
    return 1j * riccati_h_plus(ell, z)


def outgoing_riccati_prime(ell: int, z):
    return 1j * riccati_h_plus_prime(ell, z)


def outgoing_hankel0(z):
    """``i H^(1)_0(z) ~ sqrt(2/(pi z)) exp(i(z + pi/4))``; pairs with ``J_0`` as ``(H+ - H-)/(2i) = J_0``."""
    return 1j * special.hankel1(0, _positive(z, "outgoing_hankel0"))


def outgoing_hankel0_prime(z):
    return 1j * special.h1vp(0, _positive(z, "outgoing_hankel0_prime"))


def jacobi_poly(n: int, a: float, b: float, t):
    """Jacobi polynomial ``P_n^(a,b)(t)`` by the three-term recurrence."""
    t = np.asarray(t, dtype=float)
    p0 = np.ones_like(t)
    if n == 0:
        return p0
    p1 = (a + 1) + (a + b + 2) * (t - 1) / 2
    for m in range(2, n + 1):
        c = 2 * m + a + b
        a1 = 2 * m * (m + a + b) * (c - 2)
        a2 = (c - 1) * (a * a - b * b)
        a3 = (c - 2) * (c - 1) * c
        a4 = 2 * (m + a - 1) * (m + b - 1) * c
        p0, p1 = p1, ((a2 + a3 * t) * p1 - a4 * p0) / a1
    return p1


@dataclass(frozen=True)
class DelvesIndex:
    ell: int = 0
    lam: int = 0
    n: int = 0

    def __post_init__(self):
        if min(self.ell, self.lam, self.n) < 0:
            raise ValueError("Delves indices must be non-negative")

    @property
    def nu(self) -> int:
        return self.ell + self.lam + 2 * (self.n + 1)


def delves_norm(idx: DelvesIndex) -> float:
    """Constant giving unit L2 norm on ``[0, pi/2]`` (closed form via Jacobi orthogonality)."""
    l, lam, n = idx.ell, idx.lam, idx.n
    log_h = (
        lgamma(n + lam + 1.5)
        + lgamma(n + l + 1.5)
        - np.log(2 * n + l + lam + 2)
        - lgamma(n + 1)
        - lgamma(n + l + lam + 2)
    )
    return float(np.sqrt(2.0 * np.exp(-log_h)))


def delves(idx: DelvesIndex, alpha):
    r"""Normalized Delves function

    .. math:: D_\nu^{(\ell,\lambda)}(\alpha) = N \cos^{\ell+1}\alpha \, \sin^{\lambda+1}\alpha
              \, P_n^{(\lambda+1/2,\ell+1/2)}(\cos 2\alpha)

    Eigenfunction of ``-d2/da2 + l(l+1)/cos^2 + lam(lam+1)/sin^2`` with
    eigenvalue ``nu**2``; vanishes at both ends of ``[0, pi/2]``.
    """
    alpha = np.asarray(alpha, dtype=float)
    c, s = np.cos(alpha), np.sin(alpha)
    poly = jacobi_poly(idx.n, idx.lam + 0.5, idx.ell + 0.5, np.cos(2 * alpha))
    return delves_norm(idx) * c ** (idx.ell + 1) * s ** (idx.lam + 1) * poly


def delves_swave(n: int, alpha):
    """s-wave Delves function, ``(2/sqrt(pi)) sin(2(n+1) alpha)`` up to sign.

    The sign is fixed so the function is positive on its first lobe above 0.
    """
    return (2 / np.sqrt(np.pi)) * np.sin(2 * (n + 1) * np.asarray(alpha, dtype=float))


def delves_swave_d2(n: int, alpha):
    nu = 2 * (n + 1)
    return -nu * nu * delves_swave(n, alpha)
