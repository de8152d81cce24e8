"""Yukawa pair potentials and two-body bound states on a Hermite collocation grid."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .discretization import SplineBasis1D, blended_knots


@dataclass(frozen=True)
class PairPotential:
    """Sum of Yukawa terms ``V(r) = sum_k s_k exp(-mu_k r) / r`` (MeV, fm).

    ``terms`` holds ``(strength [MeV fm], range parameter mu [1/fm])`` pairs.
    """

    terms: tuple[tuple[float, float], ...]
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple((float(s), float(m)) for s, m in self.terms))
        if any(m <= 0 for _, m in self.terms):
            raise ValueError("Yukawa range parameters must be positive (short-range potential)")

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        if np.any(r <= 0):
            raise ValueError("potential evaluated at r <= 0")
        return sum(s * np.exp(-m * r) for s, m in self.terms) / r


# Malfliet-Tjon I-III parametrization used for the nd benchmark.
MT_SINGLET = PairPotential(((1438.72, 3.11), (-513.968, 1.55)), name="V1 singlet")
MT_TRIPLET = PairPotential(((1438.72, 3.11), (-626.885, 1.55)), name="V2 triplet")


def eval_potential(p: PairPotential, x, tau_x: float):
    """Potential in MeV at mass-scaled separation ``x`` (physical ``r = x / tau_x``)."""
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise ValueError("mass-scaled separation must be positive")
    return p(x / tau_x)


@dataclass(frozen=True)
class BoundState:
    """Normalized radial bound state ``phi(x)`` with ``int phi^2 dx = 1`` in mass-scaled ``x``.

    Beyond ``x_match`` the wavefunction is continued by its free tail
    ``phi(x_match) exp(-kappa (x - x_match))`` (s-wave).
    """

    energy: float
    ell: int
    basis: SplineBasis1D = field(repr=False)
    coeffs: np.ndarray = field(repr=False)
    x_match: float = field(repr=False, default=np.inf)

    @property
    def kappa(self) -> float:
        return float(np.sqrt(-self.energy))

    def __call__(self, x, deriv: int = 0):
        x = np.asarray(x, dtype=float)
        flat = np.atleast_1d(x).ravel()
        out = np.zeros(flat.shape)
        inner = flat <= self.x_match
        if np.any(inner):
            out[inner] = self.basis.evaluate(self.coeffs, flat[inner], deriv)
        if np.any(~inner):
            phi_m = self.basis.evaluate(self.coeffs, [self.x_match])[0]
            out[~inner] = phi_m * (-self.kappa) ** deriv * np.exp(-self.kappa * (flat[~inner] - self.x_match))
        return out.reshape(x.shape) if x.ndim else float(out[0])

    def log_derivative(self, x):
        """``phi'(x) / phi(x)``; equals ``-kappa`` in the free tail."""
        x = np.asarray(x, dtype=float)
        out = np.full(x.shape, -self.kappa)
        inner = x < self.x_match
        if np.any(inner):
            out[inner] = self(x[inner], 1) / self(x[inner])
        return out


def bound_state_basis(r_max: float, tau_x: float, n_intervals: int = 240) -> SplineBasis1D:
    """Default mass-scaled radial grid extending to ``r_max`` fm, vanishing at both ends."""
    knots = blended_knots(r_max * tau_x, n_intervals, ratio=20.0, growth=1.04)
    return SplineBasis1D(knots).with_dirichlet(True, True)


def solve_bound_states(p: PairPotential, ell: int, basis: SplineBasis1D, tau_x: float) -> list[BoundState]:
    """All negative-energy eigenpairs of ``-d2/dx2 + l(l+1)/x^2 + V - eps``, by increasing node count.

    Energies are in MeV; ``x`` is the mass-scaled separation. Returns an empty
    list when the potential does not bind.
    """
    pts = basis.collocation_points()
    B = basis.matrix(pts)
    A = -basis.matrix(pts, 2) + (ell * (ell + 1) / pts**2 + eval_potential(p, pts, tau_x))[:, None] * B
    w, vecs = linalg.eig(A, B)
    ok = np.isfinite(w) & (np.abs(w.imag) < 1e-8 * np.maximum(1.0, np.abs(w.real))) & (w.real < 0)
    order = np.argsort(w.real[ok])
    states = []
    nodes_q, weights_q = basis.quadrature(6)
    x_match = 0.5 * basis.hi
    for e, v in zip(w.real[ok][order], vecs[:, ok][:, order].T):
        c = np.real_if_close(v, tol=1e6)
        c = np.real(c / c[np.argmax(np.abs(c))])
        vals = basis.evaluate(c, nodes_q)
        c = c / np.sqrt(np.sum(weights_q * vals**2))
        if basis.evaluate(c, [basis.lo + 1e-6 * (basis.hi - basis.lo)], 1)[0] < 0:
            c = -c
        states.append(BoundState(float(e), ell, basis, c, x_match=x_match))
    return states


def potential_range(state: BoundState, threshold: float) -> float:
    """Smallest ``x`` beyond which ``|phi| < threshold * max|phi|`` (mass-scaled length)."""
    if threshold <= 0:
        raise ValueError("threshold must be positive")
    x = np.linspace(state.basis.lo, state.basis.hi, 20001)[1:]
    phi = np.abs(state(x))
    peak = phi.max()
    above = np.flatnonzero(phi >= threshold * peak * (1 - 1e-12))
    return float(x[above[-1]])


def weinberg_states(p: PairPotential, ell: int, basis: SplineBasis1D, tau_x: float, energy: float,
                    count: int = 1) -> list[tuple[float, BoundState]]:
    """Eigenpairs of ``(-d2/dx2 + l(l+1)/x^2 - energy) u = -(1/eta) V u`` with the largest attractive ``eta``.

    ``energy < 0``. A potential binding at ``energy`` has ``eta = 1`` with
    ``u`` its bound state; a weaker one has ``eta < 1`` and ``u`` is the shape
    it would bind with if scaled by ``1/eta``.
    """
    if energy >= 0:
        raise ValueError("Weinberg states are defined here for negative energy")
    pts = basis.collocation_points()
    B = basis.matrix(pts)
    A = -basis.matrix(pts, 2) + (ell * (ell + 1) / pts**2 - energy)[:, None] * B
    W = -eval_potential(p, pts, tau_x)[:, None] * B
    lam, vecs = linalg.eig(A, W)
    ok = np.isfinite(lam) & (np.abs(lam.imag) < 1e-8 * np.maximum(1.0, np.abs(lam.real))) & (lam.real > 0)
    order = np.argsort(lam.real[ok])[:count]
    nodes_q, weights_q = basis.quadrature(6)
    out = []
    for l_, v in zip(lam.real[ok][order], vecs[:, ok][:, order].T):
        c = np.real(v / v[np.argmax(np.abs(v))])
        c = c / np.sqrt(np.sum(weights_q * basis.evaluate(c, nodes_q) ** 2))
        if basis.evaluate(c, [basis.lo + 1e-6 * (basis.hi - basis.lo)], 1)[0] < 0:
            c = -c
        out.append((1.0 / float(l_), BoundState(float(energy), ell, basis, c, x_match=0.5 * basis.hi)))
    return out
