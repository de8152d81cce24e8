"""Mass-scaled Jacobi coordinates, polar coordinates and kinematic rotations.

Conventions
-----------
Arrangement ``i`` (1, 2 or 3) pairs particles ``j, k`` where ``(i, j, k)`` is a
cyclic permutation of ``(1, 2, 3)``::

    x_i = tau_x (r_j - r_k)
    y_i = tau_y (r_i - (m_j r_j + m_k r_k) / (m_j + m_k))

with ``tau_x = sqrt(2 mu_jk)`` and ``tau_y = sqrt(2 mu_i,jk)``. In these
coordinates the kinetic energy is ``-Lap_x - Lap_y`` (hbar = 1) and the
hyperradius ``rho**2 = x**2 + y**2`` does not depend on the arrangement.

Masses are expressed in MeV^-1 fm^-2 so that energies come out in MeV; for the
nucleon ``m = 1 / 41.47``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

HBARC2_OVER_M_NUCLEON = 41.47  # MeV fm^2


@dataclass(frozen=True)
class MassSystem:
    m1: float
    m2: float
    m3: float

    def __post_init__(self):
        if min(self.m1, self.m2, self.m3) <= 0:
            raise ValueError("masses must be strictly positive")

    @classmethod
    def equal(cls, hbar2_over_m: float = HBARC2_OVER_M_NUCLEON) -> "MassSystem":
        """Three identical particles with ``hbar^2/m`` given in MeV fm^2."""
        m = 1.0 / hbar2_over_m
        return cls(m, m, m)

    @property
    def masses(self) -> tuple[float, float, float]:
        return (self.m1, self.m2, self.m3)

    @property
    def total(self) -> float:
        return self.m1 + self.m2 + self.m3

    @property
    def is_equal(self) -> bool:
        return self.m1 == self.m2 == self.m3


@dataclass(frozen=True)
class PolarPoint:
    rho: float
    alpha: float


@dataclass(frozen=True)
class CartPoint:
    x: float
    y: float


def _cyclic(i: int) -> tuple[int, int, int]:
    if i not in (1, 2, 3):
        raise ValueError(f"arrangement index must be 1, 2 or 3, got {i!r}")
    j = i % 3 + 1
    k = j % 3 + 1
    return i, j, k


def reduced_masses(ms: MassSystem, i: int) -> tuple[float, float, float]:
    """Return ``(mu_jk, mu_i_jk, mu_3B)`` for arrangement ``i``."""
    i, j, k = _cyclic(i)
    m = ms.masses
    mi, mj, mk = m[i - 1], m[j - 1], m[k - 1]
    mu_jk = mj * mk / (mj + mk)
    mu_i_jk = mi * (mj + mk) / ms.total
    mu_3b = np.sqrt(mi * mj * mk / ms.total)
    return mu_jk, mu_i_jk, float(mu_3b)


def tau_factors(ms: MassSystem, i: int = 1) -> tuple[float, float]:
    """Scaling factors ``(tau_x, tau_y)``; a physical separation ``r`` maps to ``x = tau_x r``."""
    mu_jk, mu_i_jk, _ = reduced_masses(ms, i)
    return float(np.sqrt(2 * mu_jk)), float(np.sqrt(2 * mu_i_jk))


def polar_from_cart(x, y):
    """``(x, y) -> (rho, alpha)``; broadcasts over arrays.

    ``arctan2`` gives ``alpha = pi/2`` on the ``x = 0`` edge and 0 on ``y = 0``
    without dividing by zero.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    rho = np.hypot(x, y)
    alpha = np.arctan2(y, x)
    if rho.ndim == 0:
        return float(rho), float(alpha)
    return rho, alpha


def cart_from_polar(rho, alpha):
    rho = np.asarray(rho, dtype=float)
    alpha = np.asarray(alpha, dtype=float)
    x = rho * np.cos(alpha)
    y = rho * np.sin(alpha)
    if x.ndim == 0:
        return float(x), float(y)
    return x, y


def _jacobi_matrix(ms: MassSystem, i: int) -> np.ndarray:
    """Rows map particle positions ``(r1, r2, r3)`` to ``(x_i, y_i, R_cm)``."""
    i, j, k = _cyclic(i)
    tx, ty = tau_factors(ms, i)
    m = ms.masses
    M = np.zeros((3, 3))
    M[0, j - 1], M[0, k - 1] = tx, -tx
    mjk = m[j - 1] + m[k - 1]
    M[1, i - 1] = ty
    M[1, j - 1] = -ty * m[j - 1] / mjk
    M[1, k - 1] = -ty * m[k - 1] / mjk
    M[2, :] = np.asarray(m) / ms.total
    return M


@lru_cache(maxsize=64)
def rotation_matrix(ms: MassSystem, i: int, j: int) -> np.ndarray:
    """2x2 orthogonal matrix ``R`` with ``(x_j, y_j) = R (x_i, y_i)`` componentwise for vectors.

    Derived from the Jacobi definitions, so it holds for arbitrary masses.
    """
    Mi = _jacobi_matrix(ms, i)
    Mj = _jacobi_matrix(ms, j)
    full = Mj @ np.linalg.inv(Mi)
    R = full[:2, :2].copy()
    R.setflags(write=False)
    return R


def rotation_angle(ms: MassSystem, i: int, j: int) -> float:
    """Kinematic angle ``phi`` in ``(0, pi/2)`` with ``|cos phi| = |R[0, 0]|``."""
    R = rotation_matrix(ms, i, j)
    return float(np.arctan2(abs(R[0, 1]), abs(R[0, 0])))


def rotate_arrangement(ms: MassSystem, i: int, j: int, x, y, u):
    """Norms ``(x_j, y_j)`` of the Jacobi vectors of arrangement ``j``.

    ``x``, ``y`` are the norms in arrangement ``i`` and ``u`` the cosine of the
    angle between the vectors ``x_i`` and ``y_i``. Broadcasts over arrays.
    """
    u = np.asarray(u, dtype=float)
    if np.any(np.abs(u) > 1):
        raise ValueError("u must lie in [-1, 1]")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    (a, b), (c, d) = rotation_matrix(ms, i, j)
    xj2 = a * a * x * x + b * b * y * y + 2 * a * b * x * y * u
    yj2 = c * c * x * x + d * d * y * y + 2 * c * d * x * y * u
    xj = np.sqrt(np.maximum(xj2, 0.0))
    yj = np.sqrt(np.maximum(yj2, 0.0))
    if xj.ndim == 0:
        return float(xj), float(yj)
    return xj, yj


def rotate_polar(ms: MassSystem, i: int, j: int, point: PolarPoint, u: float) -> CartPoint:
    x, y = cart_from_polar(point.rho, point.alpha)
    return CartPoint(*rotate_arrangement(ms, i, j, x, y, u))
