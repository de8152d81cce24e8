"""Collocated kinetic, potential and Jacobi-kernel operators in polar coordinates.

Unknowns are stored as complex arrays ``X`` of shape ``(n_rho, n_c * n_alpha)``:
rows index the hyperradial basis, columns the (channel, hyperangular basis)
pairs. A Kronecker term ``A (x) B`` acts as ``A @ X @ B.T``, so the kinetic
operator is a sum of two such terms and its inverse can be applied through
small eigendecompositions (see :mod:`faddeev.solver`).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import kinematics
from .discretization import Grid2D, SplineBasis1D
from .twobody import PairPotential, eval_potential


class UnsupportedChannelError(ValueError):
    """Raised for partial waves outside the validated (l, lambda) = (0, 0) scope."""


@dataclass(frozen=True)
class Channel:
    ell: int
    lam: int
    L: int
    s: Fraction
    sigma: Fraction
    S: Fraction
    t: Fraction
    name: str = ""


def recoupling_matrix(pair_values, single: Fraction = Fraction(1, 2), total: Fraction = Fraction(1, 2)) -> np.ndarray:
    """Spin (or isospin) recoupling between cyclic arrangements of three spin-1/2 particles.

    ``w[a, b] = (-1)^{s_b} sqrt((2 s_a + 1)(2 s_b + 1)) {1/2 1/2 s_a; 1/2 S s_b}``
    in the basis of pair quantum numbers ``pair_values``.
    """
    from sympy import Rational
    from sympy.physics.wigner import wigner_6j

    half = Rational(single.numerator, single.denominator)
    S = Rational(total.numerator, total.denominator)
    n = len(pair_values)
    w = np.zeros((n, n))
    for a, sa in enumerate(pair_values):
        for b, sb in enumerate(pair_values):
            sa_r = Rational(Fraction(sa).numerator, Fraction(sa).denominator)
            sb_r = Rational(Fraction(sb).numerator, Fraction(sb).denominator)
            sixj = wigner_6j(half, half, sa_r, half, S, sb_r)
            w[a, b] = float((-1) ** int(sb_r) * ((2 * sa_r + 1) * (2 * sb_r + 1)) ** Rational(1, 2) * sixj)
    return w


@dataclass(frozen=True)
class ChannelSet:
    channels: tuple[Channel, ...]
    w_s: np.ndarray = field(repr=False)
    w_t: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return len(self.channels)

    @property
    def w(self) -> np.ndarray:
        return self.w_s * self.w_t

    def permuted(self, order) -> "ChannelSet":
        order = list(order)
        return ChannelSet(tuple(self.channels[i] for i in order),
                          self.w_s[np.ix_(order, order)], self.w_t[np.ix_(order, order)])


def nd_doublet() -> ChannelSet:
    """The two s-wave channels of the nd doublet (J = 1/2+): singlet then triplet pair."""
    half = Fraction(1, 2)
    chans = (
        Channel(0, 0, 0, Fraction(0), half, half, Fraction(1), "singlet"),
        Channel(0, 0, 0, Fraction(1), half, half, Fraction(0), "triplet"),
    )
    w_s = recoupling_matrix([c.s for c in chans])
    w_t = recoupling_matrix([c.t for c in chans])
    return ChannelSet(chans, w_s, w_t)


@dataclass
class KronSum:
    """``sum_k A_k (x) B_k`` acting on ``X`` of shape ``(A.shape[1], B.shape[1])``."""

    terms: list

    @property
    def shape(self) -> tuple[int, int]:
        A, B = self.terms[0]
        return A.shape[0] * B.shape[0], A.shape[1] * B.shape[1]

    def apply(self, X: np.ndarray) -> np.ndarray:
        out = None
        for A, B in self.terms:
            term = A @ X @ B.T
            out = term if out is None else out + term
        return out

    def dense(self) -> np.ndarray:
        return sum(np.kron(A, B) for A, B in self.terms)

    def __add__(self, other: "KronSum") -> "KronSum":
        return KronSum(self.terms + other.terms)

    def info(self) -> dict:
        return {"shape": list(self.shape), "terms": len(self.terms),
                "nonzeros": int(sum(np.count_nonzero(A) * np.count_nonzero(B) for A, B in self.terms))}


def jacobi_limits(alpha, phi: float) -> tuple[np.ndarray, np.ndarray]:
    """Integration range in the rotated hyperangle for the s-wave transform."""
    alpha = np.asarray(alpha, dtype=float)
    lo = np.abs(alpha - phi)
    hi = np.minimum(alpha + phi, np.pi - alpha - phi)
    return lo, hi


def jacobi_transform_swave(h, alpha, ms: kinematics.MassSystem, i: int = 1, j: int = 2, order: int = 64):
    """s-wave Jacobi transform of a hyperangular function ``h``.

    ``J[h](alpha) = 1/2 int_{-1}^{1} du  sin(2 alpha) / sin(2 alpha_j) h(alpha_j(u))``
    evaluated by Gauss-Legendre quadrature in ``u``; independent of ``rho``.
    """
    alpha = np.atleast_1d(np.asarray(alpha, dtype=float))
    u, wu = np.polynomial.legendre.leggauss(order)
    x, y = np.cos(alpha)[:, None], np.sin(alpha)[:, None]
    xj, yj = kinematics.rotate_arrangement(ms, i, j, x, y, u[None, :])
    aj = np.arctan2(yj, xj)
    vals = h(aj)
    if not np.all(np.isfinite(vals)):
        raise FloatingPointError("non-finite integrand in Jacobi transform")
    ratio = np.sin(2 * alpha)[:, None] / np.sin(2 * aj)
    return 0.5 * np.sum(wu * ratio * vals, axis=1)


def _other_arrangements(i: int) -> tuple[int, int]:
    return (i % 3 + 1, (i + 1) % 3 + 1)


def jacobi_kernel_matrix(basis: SplineBasis1D, points, ms: kinematics.MassSystem, i: int = 1) -> np.ndarray:
    """Sum over the two other arrangements of the s-wave transform of each basis function.

    Uses ``J[h](alpha) = (1/sin 2phi) int_{lo}^{hi} h`` with exact piecewise
    integration of the cubic splines; rows are ``points``, columns basis functions.
    """
    points = np.asarray(points, dtype=float)
    out = np.zeros((points.size, basis.size))
    for j in _other_arrangements(i):
        phi = kinematics.rotation_angle(ms, i, j)
        lo, hi = jacobi_limits(points, phi)
        out += (basis.integral_matrix(hi) - basis.integral_matrix(lo)) / np.sin(2 * phi)
    return out


def _require_swave(channels: ChannelSet) -> None:
    for c in channels.channels:
        if (c.ell, c.lam) != (0, 0):
            raise UnsupportedChannelError(f"channel {c.name or c} has (l, lambda) = ({c.ell}, {c.lam}); "
                                          "only s-wave bipolar channels are supported")


@dataclass
class RhoBoundary:
    """Outer hyperradial boundary condition ``f'(rho_max) = G f(rho_max)``.

    ``G`` is a scalar (alpha-independent log-derivative) or an ``(n_B, n_B)``
    matrix acting on the hyperangular coefficients of the boundary trace. The
    reduced coefficients ``X`` exclude the derivative spline at ``rho_max``.
    """

    G: complex | np.ndarray

    @property
    def is_scalar(self) -> bool:
        return np.ndim(self.G) == 0

    def to_full(self, X: np.ndarray) -> np.ndarray:
        last = X[-1:] * self.G if self.is_scalar else X[-1:] @ np.asarray(self.G).T
        return np.vstack([X, last])

    def reduce_matrix(self, n_red: int, L0: complex | None = None) -> np.ndarray:
        """``(n_red + 1, n_red)`` map for a scalar log-derivative (``L0`` overrides ``G``)."""
        L = self.G if L0 is None else L0
        if np.ndim(L) != 0:
            raise ValueError("a scalar log-derivative is needed for the Kronecker form")
        P = np.zeros((n_red + 1, n_red), dtype=complex)
        P[:n_red] = np.eye(n_red)
        P[n_red, n_red - 1] = L
        return P


def alpha_boundary_matrix(alpha_basis: SplineBasis1D, log_derivative: np.ndarray) -> np.ndarray:
    """Coefficient map for an alpha-dependent log-derivative, exact at the alpha collocation points."""
    pts = alpha_basis.collocation_points()
    B = alpha_basis.matrix(pts)
    return np.linalg.solve(B, log_derivative[:, None] * B)


@dataclass
class CollocationData:
    """One-dimensional collocation matrices and pointwise tables shared by all operators."""

    grid: Grid2D
    channels: ChannelSet
    ms: kinematics.MassSystem
    rho_pts: np.ndarray = field(init=False, repr=False)
    alpha_pts: np.ndarray = field(init=False, repr=False)
    Br: np.ndarray = field(init=False, repr=False)
    D1r: np.ndarray = field(init=False, repr=False)
    D2r: np.ndarray = field(init=False, repr=False)
    Ba: np.ndarray = field(init=False, repr=False)
    D2a: np.ndarray = field(init=False, repr=False)
    Ja: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        _require_swave(self.channels)
        rb, ab = self.grid.rho, self.grid.alpha
        self.rho_pts = rb.collocation_points()
        self.alpha_pts = ab.collocation_points()
        if rb.size != self.rho_pts.size + 1:
            raise ValueError("rho basis must carry one more function than collocation points "
                             "(outer boundary condition not yet applied)")
        if ab.size != self.alpha_pts.size:
            raise ValueError("alpha basis must be square after its boundary conditions")
        self.Br = rb.matrix(self.rho_pts)
        self.D1r = rb.matrix(self.rho_pts, 1)
        self.D2r = rb.matrix(self.rho_pts, 2)
        self.Ba = ab.matrix(self.alpha_pts)
        self.D2a = ab.matrix(self.alpha_pts, 2)
        self.Ja = jacobi_kernel_matrix(ab, self.alpha_pts, self.ms)

    @property
    def n_rho(self) -> int:
        return self.rho_pts.size

    @property
    def n_alpha(self) -> int:
        return self.alpha_pts.size

    @property
    def n_B(self) -> int:
        return self.channels.n * self.n_alpha

    def x_at_points(self) -> np.ndarray:
        """Mass-scaled pair separation ``rho cos(alpha)`` on the collocation grid."""
        return self.rho_pts[:, None] * np.cos(self.alpha_pts)[None, :]


def assemble_T(data: CollocationData) -> KronSum:
    """Polar kinetic operator ``-d2/drho2 - (1/rho) d/drho - (1/rho^2) d2/dalpha2`` (+ centrifugal).

    Acts on full hyperradial coefficients (boundary trace included).
    """
    r = data.rho_pts[:, None]
    Ic = np.eye(data.channels.n)
    A1 = -data.D2r - data.D1r / r
    A2 = data.Br / r**2
    blocks = []
    for c in data.channels.channels:
        a = data.alpha_pts
        cent = c.ell * (c.ell + 1) / np.cos(a) ** 2 + c.lam * (c.lam + 1) / np.sin(a) ** 2
        blocks.append(-data.D2a + cent[:, None] * data.Ba)
    B2 = np.zeros((data.n_B, data.n_B))
    for k, blk in enumerate(blocks):
        sl = slice(k * data.n_alpha, (k + 1) * data.n_alpha)
        B2[sl, sl] = blk
    return KronSum([(A1, np.kron(Ic, data.Ba)), (A2, B2)])


def assemble_identity(data: CollocationData) -> KronSum:
    """Coefficients to values at the collocation points."""
    return KronSum([(data.Br, np.kron(np.eye(data.channels.n), data.Ba))])


def potential_table(data: CollocationData, potentials) -> np.ndarray:
    """``V_a(rho cos alpha)`` in MeV as an array ``(n_rho, n_c * n_alpha)``."""
    tau_x, _ = kinematics.tau_factors(data.ms, 1)
    x = data.x_at_points()
    cols = [eval_potential(p, x, tau_x) for p in potentials]
    return np.concatenate(cols, axis=1)


@dataclass
class DiagonalOperator:
    """``diag(weights) @ base``: pointwise multiplication of collocation values."""

    weights: np.ndarray
    base: KronSum

    def apply(self, X: np.ndarray) -> np.ndarray:
        return self.weights * self.base.apply(X)

    def dense(self) -> np.ndarray:
        return self.weights.ravel()[:, None] * self.base.dense()


def assemble_V(data: CollocationData, potentials: list[PairPotential]) -> DiagonalOperator:
    if len(potentials) != data.channels.n:
        raise ValueError("one pair potential per channel is required")
    return DiagonalOperator(potential_table(data, potentials), assemble_identity(data))


def assemble_K(data: CollocationData) -> KronSum:
    """Recoupled Jacobi kernel ``w (x) k`` with ``k`` the s-wave transform summed over both other arrangements.

    Maps coefficients to values of the transformed component at the collocation
    points; block-diagonal in ``rho``.
    """
    return KronSum([(data.Br, np.kron(data.channels.w, data.Ja))])


def operator_summary(data: CollocationData) -> str:
    """JSON diagnostics: dimensions and nonzero counts of the assembled operators."""
    T = assemble_T(data)
    K = assemble_K(data)
    return json.dumps({
        "n_rho": data.n_rho, "n_alpha": data.n_alpha, "n_channels": data.channels.n,
        "N": data.n_rho * data.n_B, "T": T.info(), "K": K.info(),
    })
