"""Incoming states, right-hand sides and the preconditioned GMRES solve.

The collocated Faddeev equation for the scattered part ``v`` of a component is

    (T + V + V K - E) v = -V K chi               (bound-plane-wave incoming)
    (T + V + V K - E) v = -V (1 + K) chi         (cylindrical-wave incoming)

where ``chi`` is the incoming state, ``K`` the recoupled Jacobi kernel and
``V`` the diagonal pair potential. ``(T - E)`` is a sum of two Kronecker
products and its inverse is used as the preconditioner.
"""

from __future__ import annotations

import json
import logging
import time
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg
from scipy.sparse.linalg import LinearOperator, gmres

from . import kinematics, specfun
from .discretization import Grid2D, build_alpha_grid, build_rho_grid
from .operators import (ChannelSet, CollocationData, KronSum, RhoBoundary, alpha_boundary_matrix,
                        assemble_T, jacobi_transform_swave, nd_doublet, potential_table)
from .twobody import (MT_SINGLET, MT_TRIPLET, BoundState, PairPotential, bound_state_basis,
                      solve_bound_states, weinberg_states)

log = logging.getLogger(__name__)


class ClosedChannelError(ValueError):
    pass


class ConvergenceError(RuntimeError):
    def __init__(self, message: str, history):
        super().__init__(message)
        self.history = list(history)


class SingularPencilError(ArithmeticError):
    pass


@dataclass(frozen=True)
class SolveConfig:
    """Numerical parameters. ``rho_extent_fm`` is ``rho / sqrt(tau_x tau_y)`` at the grid edge."""

    rho_extent_fm: float = 60.0
    n_rho: int = 128
    n_alpha: int = 64
    tol: float = 1e-10
    maxiter: int = 200
    restart: int = 200
    bound_r_max_fm: float = 60.0
    bound_intervals: int = 160
    rho_ratio: float = 5.0
    rho_growth: float = 1.05
    alpha_bound_fraction: float = 0.8
    deflation_modes: int = 20


DESK = SolveConfig()
PRODUCTION = SolveConfig(rho_extent_fm=140.0, n_rho=500, n_alpha=256)


@dataclass
class ScatteringSetup:
    """Everything that does not depend on the energy: masses, channels, potentials, grids."""

    ms: kinematics.MassSystem
    channels: ChannelSet
    potentials: list[PairPotential]
    deuteron: BoundState
    bound_channel: int
    config: SolveConfig
    data: CollocationData = field(repr=False)
    pair_states: list = field(default_factory=list, repr=False)

    @property
    def tau(self) -> tuple[float, float]:
        return kinematics.tau_factors(self.ms, 1)

    @property
    def rho_max(self) -> float:
        return self.data.grid.rho.hi

    @property
    def grid(self) -> Grid2D:
        return self.data.grid

    @classmethod
    def build(cls, config: SolveConfig = DESK, ms: kinematics.MassSystem | None = None,
              channels: ChannelSet | None = None, potentials: list[PairPotential] | None = None,
              bound_channel: int = 1) -> "ScatteringSetup":
        ms = ms or kinematics.MassSystem.equal()
        channels = channels or nd_doublet()
        potentials = potentials or [MT_SINGLET, MT_TRIPLET]
        tau_x, tau_y = kinematics.tau_factors(ms, 1)
        xbasis = bound_state_basis(config.bound_r_max_fm, tau_x, config.bound_intervals)
        states = solve_bound_states(potentials[bound_channel], 0, xbasis, tau_x)
        if not states:
            raise ValueError("the bound channel potential has no bound state")
        deuteron = states[0]
        rho_max = config.rho_extent_fm * np.sqrt(tau_x * tau_y)
        rb = build_rho_grid(rho_max, config.n_rho, config.rho_ratio, config.rho_growth)
        ab = build_alpha_grid(config.n_alpha, deuteron, rho_max, config.alpha_bound_fraction)
        data = CollocationData(Grid2D(rb, ab), channels, ms)
        # pair shapes at the deuteron energy, one per channel, for the coarse space
        pair_states = []
        for p in potentials:
            ws = weinberg_states(p, 0, xbasis, tau_x, deuteron.energy, 1)
            pair_states.append(ws[0][1] if ws else None)
        return cls(ms, channels, list(potentials), deuteron, bound_channel, config, data, pair_states)

    def momenta(self, E: float) -> tuple[float, float]:
        """Mass-scaled ``q = sqrt(E - E_d)`` and ``k = sqrt(E)`` (``k`` is imaginary below breakup)."""
        q2 = E - self.deuteron.energy
        if q2 <= 0:
            raise ClosedChannelError(f"the (1+2) channel is closed at E = {E} MeV")
        return float(np.sqrt(q2)), complex(np.sqrt(complex(E)))


@dataclass(frozen=True)
class BoundPlaneWave:
    """``phi_d(x) j(q y)`` in the bound channel."""

    channel: int
    q: float

    def values(self, setup: ScatteringSetup, rho, alpha, d_alpha: int = 0):
        phi = setup.deuteron
        x, y = rho * np.cos(alpha), rho * np.sin(alpha)
        jq = specfun.riccati_j(0, self.q * y)
        if d_alpha == 0:
            return phi(x) * jq
        jp = specfun.riccati_j_prime(0, self.q * y)
        return -y * phi(x, 1) * jq + self.q * x * phi(x) * jp


@dataclass(frozen=True)
class CylindricalWave:
    """Free solution ``(-1)^(nu/2) c D_nu(alpha) J_nu(k rho) ~ c D_nu(alpha) J_0(k rho)``.

    ``n`` selects the s-wave Delves function ``sin(2(n+1) alpha)``; ``scale``
    is the incident-function normalization ``c``.
    """

    channel: int
    n: int
    k: float
    scale: float = 1.0

    @property
    def nu(self) -> int:
        return 2 * (self.n + 1)

    def incident(self, alpha):
        return self.scale * specfun.delves_swave(self.n, alpha)

    def beta(self, ms: kinematics.MassSystem, i: int = 1) -> float:
        """Jacobi-transform eigenvalue of ``D_nu``, summed over the two other arrangements."""
        a0 = np.pi / (4 * (self.n + 1))
        h = lambda a: specfun.delves_swave(self.n, a)
        others = [j for j in (1, 2, 3) if j != i]
        return float(sum(jacobi_transform_swave(h, a0, ms, i, j)[0] for j in others) / h(a0))

    def image_weights(self, setup: ScatteringSetup) -> np.ndarray:
        """Channel weights ``delta_ab + w_ba beta`` of the free wave ``(1 + K) chi``."""
        w = np.asarray(setup.channels.w, dtype=float)
        out = w[:, self.channel] * self.beta(setup.ms)
        out[self.channel] += 1.0
        return out

    def values(self, setup: ScatteringSetup, rho, alpha, d_alpha: int = 0):
        sign = (-1) ** (self.nu // 2)
        radial = sign * self.scale * specfun.bessel_J(self.nu, self.k * rho)
        if d_alpha == 0:
            return radial * specfun.delves_swave(self.n, alpha)
        return radial * (2 / np.sqrt(np.pi)) * self.nu * np.cos(self.nu * alpha)


@dataclass
class IncomingState:
    kind: BoundPlaneWave | CylindricalWave

    @property
    def is_bound(self) -> bool:
        return isinstance(self.kind, BoundPlaneWave)


def incoming_nd(setup: ScatteringSetup, E: float) -> IncomingState:
    q, _ = setup.momenta(E)
    return IncomingState(BoundPlaneWave(setup.bound_channel, q))


def incoming_nnp(setup: ScatteringSetup, E: float, n: int, channel: int | None = None,
                 scale: float = 1.0) -> IncomingState:
    """Three free particles entering with ``i(alpha)`` the ``n``-th s-wave Delves function (``n >= 1``).

    By default the ``n``-th incident function enters the ``n``-th channel.
    """
    if E <= 0:
        raise ClosedChannelError("the (1+1+1) channel is closed below breakup")
    if n < 1:
        raise ValueError("nnp incident functions are numbered from 1")
    channel = n - 1 if channel is None else channel
    return IncomingState(CylindricalWave(channel, n - 1, float(np.sqrt(E)), scale))


def chi_tables(setup: ScatteringSetup, state: IncomingState) -> tuple[np.ndarray, np.ndarray]:
    """Incoming state at the collocation points and its hyperangular spline coefficients per ``rho`` point.

    Both arrays have shape ``(n_rho, n_c * n_alpha)``.
    """
    d = setup.data
    ab = d.grid.alpha
    rho = d.rho_pts[:, None]
    kind = state.kind
    vals = np.zeros((d.n_rho, d.n_B))
    coeffs = np.zeros((d.n_rho, d.n_B))
    sl = slice(kind.channel * d.n_alpha, (kind.channel + 1) * d.n_alpha)
    vals[:, sl] = kind.values(setup, rho, d.alpha_pts[None, :])
    kv = kind.values(setup, rho, ab.knots[None, :])
    kd = kind.values(setup, rho, ab.knots[None, :], d_alpha=1)
    coeffs[:, sl] = ab.hermite_coefficients(kv.T, kd.T).T
    return vals, coeffs


def build_rhs(setup: ScatteringSetup, state: IncomingState, vtab: np.ndarray | None = None) -> np.ndarray:
    """``-V K chi`` for a bound-plane-wave, ``-V (1 + K) chi`` for a cylindrical-wave incoming state."""
    d = setup.data
    vtab = potential_table(d, setup.potentials) if vtab is None else vtab
    vals, coeffs = chi_tables(setup, state)
    kchi = coeffs @ np.kron(setup.channels.w, d.Ja).T
    if state.is_bound:
        return -(vtab * kchi)
    return -(vtab * (vals + kchi))


def outer_log_derivative(setup: ScatteringSetup, E: float):
    """Outgoing-wave log-derivative at ``rho_max``.

    Above breakup: ``k H0+'(k rho)/H0+(k rho)``, the same for every alpha.
    Below breakup: that of the outgoing bound plane wave ``phi_d(rho cos a) h+(q rho sin a)``,
    returned as an array over the alpha collocation points.
    """
    rho = setup.rho_max
    if E > 0:
        k = np.sqrt(E)
        return complex(k * specfun.outgoing_hankel0_prime(k * rho) / specfun.outgoing_hankel0(k * rho))
    q, _ = setup.momenta(E)
    a = setup.data.alpha_pts
    x, y = rho * np.cos(a), rho * np.sin(a)
    hq = specfun.outgoing_riccati(0, q * y)
    hqp = specfun.outgoing_riccati_prime(0, q * y)
    return np.cos(a) * setup.deuteron.log_derivative(x) + q * np.sin(a) * hqp / hq


class KronInverse:
    """Apply ``(A1 (x) B1 + A2 (x) B2)^-1`` through two small eigendecompositions.

    With ``A1^-1 A2 = P diag(d) P^-1`` and ``B1^-1 B2 = Q diag(g) Q^-1`` the
    inverse is ``(P (x) Q) (1 + d (x) g)^-1 (P^-1 A1^-1 (x) Q^-1 B1^-1)``;
    each application costs ``O(n_A^2 n_B + n_B^2 n_A)``.
    """

    def __init__(self, A1, B1, A2, B2, singular_tol: float = 1e-12):
        d, P = linalg.eig(linalg.solve(A1, A2))
        g, Q = linalg.eig(linalg.solve(B1, B2))
        self.P, self.Q = P, Q
        self.left = linalg.solve(P, linalg.inv(A1))
        self.right = linalg.solve(Q, linalg.inv(B1))
        denom = 1.0 + np.outer(d, g)
        if np.min(np.abs(denom)) < singular_tol * np.max(np.abs(denom)):
            raise SingularPencilError("energy coincides with an eigenvalue of the free operator")
        self.inv_denom = 1.0 / denom

    def apply(self, Y: np.ndarray) -> np.ndarray:
        Z = self.left @ Y @ self.right.T
        return self.P @ (Z * self.inv_denom) @ self.Q.T


def precondition(T: KronSum, identity: KronSum, E: float) -> KronInverse:
    """Inverse action of ``(T - E 1)`` for a two-term Kronecker kinetic operator."""
    (A1, B1), (A2, B2) = T.terms
    (Ir, Ia), = identity.terms
    if not np.array_equal(B1, Ia):
        raise ValueError("kinetic first term must share the identity's hyperangular factor")
    return KronInverse(A1 - E * Ir, B1, A2, B2)


class DeflatedKron:
    """Kronecker inverse with a coarse-space correction.

    ``(T - E)^-1`` leaves slow modes shaped like a pair state times a
    spectator standing wave (their number grows with the box). With ``U`` an
    orthonormal basis of such products and ``B = M1 A`` the preconditioned
    operator, ``M = (1 - U U^H + U (U^H B U)^-1 U^H) M1`` moves the part of the
    spectrum that ``U`` spans to one.
    """

    def __init__(self, base: KronInverse, matvec, Z: np.ndarray):
        self.base = base
        self.shape = base.inv_denom.shape
        self.U, _ = linalg.qr(Z, mode="economic")
        BU = np.column_stack([self._m1(matvec(u)) for u in self.U.T])
        self.coarse = linalg.lu_factor(self.U.conj().T @ BU)

    def _m1(self, r):
        return self.base.apply(r.reshape(self.shape)).ravel()

    def apply(self, Y: np.ndarray) -> np.ndarray:
        z = self._m1(Y)
        c = self.U.conj().T @ z
        z = z + self.U @ (linalg.lu_solve(self.coarse, c) - c)
        return z.reshape(self.shape)


@dataclass
class SolveResult:
    coefficients: np.ndarray
    iterations: int
    residual: float
    history: list = field(default_factory=list, repr=False)
    seconds: float = 0.0

    def diagnostics(self, E: float) -> str:
        return json.dumps({"E": E, "iterations": self.iterations, "residual": self.residual,
                           "seconds": round(self.seconds, 3), "history": self.history})


class FaddeevSystem:
    """Collocated operator ``T + V + V K - E`` at one energy with its outer boundary condition."""

    def __init__(self, setup: ScatteringSetup, E: float, boundary: RhoBoundary | None = None,
                 with_potential: bool = True):
        if E == 0:
            raise ValueError("E = 0 (breakup threshold) is not supported")
        self.setup = setup
        self.E = float(E)
        d = setup.data
        self.data = d
        if boundary is None:
            L = outer_log_derivative(setup, E)
            if np.ndim(L) == 0:
                boundary = RhoBoundary(L)
            else:
                Lam = alpha_boundary_matrix(d.grid.alpha, L)
                boundary = RhoBoundary(np.kron(np.eye(setup.channels.n), Lam))
                self.L_alpha = L
        self.boundary = boundary
        self.vtab = potential_table(d, setup.potentials) if with_potential else np.zeros((d.n_rho, d.n_B))
        T = assemble_T(d)
        (self.A1r, self.BaI), (_, self.B2) = T.terms
        self.Kab = np.kron(setup.channels.w, d.Ja)
        self.VKfull = self.BaI + self.Kab
        self.r2 = d.rho_pts[:, None] ** 2
        self._precond = None

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.n_rho, self.data.n_B

    @property
    def N(self) -> int:
        return self.data.n_rho * self.data.n_B

    def preconditioner_L0(self) -> complex:
        """Scalar log-derivative used in the Kronecker preconditioner."""
        if self.boundary.is_scalar:
            return complex(self.boundary.G)
        q, _ = self.setup.momenta(self.E)
        return 1j * q

    def kron_T_minus_E(self) -> tuple[KronSum, KronSum]:
        """Reduced ``T`` and ``1`` as Kronecker sums (scalar boundary condition)."""
        Pr = self.boundary.reduce_matrix(self.data.n_rho, self.preconditioner_L0())
        d = self.data
        T = KronSum([(self.A1r @ Pr, self.BaI), ((d.Br / self.r2) @ Pr, self.B2)])
        Id = KronSum([(d.Br @ Pr, self.BaI)])
        return T, Id

    def kron_preconditioner(self) -> KronInverse:
        T, Id = self.kron_T_minus_E()
        return precondition(T, Id, self.E)

    def coarse_space(self, modes: int) -> np.ndarray:
        """Coefficient vectors of ``u_a(x) sin(j pi y / rho_max)``, ``j = 1..modes``, per channel ``a``.

        ``u_a`` is the pair state of channel ``a`` at the deuteron energy.
        Values at the collocation points are converted with the Kronecker
        identity carrying the preconditioner's boundary condition.
        """
        d, setup = self.data, self.setup
        Pr = self.boundary.reduce_matrix(d.n_rho, self.preconditioner_L0())
        iBr = linalg.inv(d.Br @ Pr)
        iBa = linalg.inv(self.BaI).T
        rho, a = d.rho_pts[:, None], d.alpha_pts[None, :]
        x, y = rho * np.cos(a), rho * np.sin(a)
        cols = []
        for ch, u in enumerate(setup.pair_states):
            if u is None:
                continue
            ux = u(x)
            sl = slice(ch * d.n_alpha, (ch + 1) * d.n_alpha)
            for j in range(1, modes + 1):
                F = np.zeros((d.n_rho, d.n_B), dtype=complex)
                F[:, sl] = ux * np.sin(j * np.pi * y / setup.rho_max)
                cols.append((iBr @ F @ iBa).ravel())
        return np.array(cols).T

    def deflation_modes(self) -> int:
        """Configured spectator modes, raised to cover the open spectator momentum with margin."""
        m = self.setup.config.deflation_modes
        if m <= 0:
            return 0
        q2 = self.E - self.setup.deuteron.energy
        if q2 > 0:
            m = max(m, int(np.ceil(1.2 * np.sqrt(q2) * self.setup.rho_max / np.pi)) + 5)
        return m

    @property
    def preconditioner(self) -> KronInverse | DeflatedKron:
        if self._precond is None:
            base = self.kron_preconditioner()
            m = self.deflation_modes()
            if m and any(u is not None for u in self.setup.pair_states):
                base = DeflatedKron(base, self.matvec, self.coarse_space(m))
            self._precond = base
        return self._precond

    def apply(self, X: np.ndarray) -> np.ndarray:
        d = self.data
        Xf = self.boundary.to_full(X)
        Y0 = d.Br @ Xf
        Y1 = self.A1r @ Xf
        out = (Y1 - self.E * Y0) @ self.BaI.T + (Y0 / self.r2) @ self.B2.T
        out += self.vtab * (Y0 @ self.VKfull.T)
        return out

    def matvec(self, x: np.ndarray) -> np.ndarray:
        return self.apply(x.reshape(self.shape)).ravel()

    def dense(self) -> np.ndarray:
        """Full matrix (small grids only)."""
        n = self.N
        cols = [self.matvec(e) for e in np.eye(n, dtype=complex)]
        return np.array(cols).T

    def field(self, X: np.ndarray) -> np.ndarray:
        """Full tensor coefficients ``(n_rho + 1, n_c, n_alpha)`` including the boundary trace."""
        return self.boundary.to_full(X).reshape(self.data.n_rho + 1, self.setup.channels.n, self.data.n_alpha)


def solve(system: FaddeevSystem, rhs: np.ndarray, tol: float | None = None, maxiter: int | None = None,
          restart: int | None = None, x0: np.ndarray | None = None, preconditioned: bool = True,
          raise_on_failure: bool = True) -> SolveResult:
    """Right-preconditioned GMRES; the residual is the true ``||A v - rhs|| / ||rhs||``.

    GMRES runs on ``A M`` so the residual it minimizes and tests is that of
    the original system. ``x0`` seeds the iteration; a converged seed returns
    after zero iterations.
    """
    cfg = system.setup.config
    tol = cfg.tol if tol is None else tol
    maxiter = cfg.maxiter if maxiter is None else maxiter
    restart = min(cfg.restart if restart is None else restart, maxiter)
    b = np.asarray(rhs, dtype=complex).ravel()
    bnorm = np.linalg.norm(b)
    n = b.size
    t0 = time.perf_counter()
    x = np.zeros(n, dtype=complex) if x0 is None else np.asarray(x0, dtype=complex).ravel().copy()
    if bnorm == 0 and x0 is None:
        return SolveResult(x.reshape(system.shape), 0, 0.0)
    bnorm = bnorm or 1.0
    if preconditioned:
        pc = system.preconditioner
        M = lambda u: pc.apply(u.reshape(system.shape)).ravel()
    else:
        M = lambda u: u
    AM = LinearOperator((n, n), matvec=lambda u: system.matvec(M(u)), dtype=complex)
    history: list[float] = []
    r = b - system.matvec(x)
    residual = np.linalg.norm(r) / bnorm
    while residual > tol and len(history) < maxiter:
        rnorm = np.linalg.norm(r)
        budget = min(restart, maxiter - len(history))
        start = len(history)
        u, _ = gmres(AM, r, rtol=0.9 * tol * bnorm / rnorm, atol=0.0, restart=budget, maxiter=1,
                     callback=lambda pr: history.append(pr * rnorm / bnorm), callback_type="pr_norm")
        x += M(u)
        r = b - system.matvec(x)
        residual = np.linalg.norm(r) / bnorm
        if len(history) == start:
            break
    result = SolveResult(x.reshape(system.shape), len(history), float(residual),
                         [float(h) for h in history], time.perf_counter() - t0)
    log.debug(result.diagnostics(system.E))
    if residual > tol and raise_on_failure:
        raise ConvergenceError(f"GMRES did not reach {tol:g} in {maxiter} iterations "
                               f"(residual {residual:.3e})", history)
    return result
