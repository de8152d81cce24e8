"""From solved Faddeev components to T- and S-matrix elements.

The scattered part ``v`` of a component is resampled on a Cartesian box
inscribed in the polar grid and projected on the deuteron to get ``g(y)``;
``g`` is fitted to regular and outgoing bound-plane-wave and cylindrical
terms. The bound-plane-wave part is then subtracted from ``v`` and the
remainder, expanded in hyperangular Delves functions, is fitted mode by mode
to regular and outgoing Bessel functions to get ``C(alpha)`` and ``T(alpha)``.
All fits are linear least squares (QR).
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import linalg

from . import kinematics, specfun
from .discretization import RadialField
from .sanalysis import AlphaQuadrature, DefectReport, HybridSMatrix, normalize_incident
from .solver import (FaddeevSystem, IncomingState, ScatteringSetup, SolveResult, build_rhs, incoming_nd,
                     incoming_nnp, solve)
from .twobody import BoundState, potential_range

log = logging.getLogger(__name__)

BREAKUP_COMPARISON_FACTOR = np.sqrt(2 / np.pi) * np.exp(1j * np.pi / 4) / 2j


class IllConditionedFitError(ArithmeticError):
    def __init__(self, message: str, condition: float):
        super().__init__(message)
        self.condition = condition


def elab_to_cm(E_lab, E_d: float):
    """Center-of-mass three-body energy for a neutron of lab energy ``E_lab`` on a deuteron at rest."""
    return E_d + 2.0 / 3.0 * np.asarray(E_lab, dtype=float)


def cm_to_elab(E, E_d: float):
    return 1.5 * (np.asarray(E, dtype=float) - E_d)


@dataclass(frozen=True)
class FitConfig:
    """Fit windows as fractions of the box edge, quadrature sizes and quality gates."""

    window: tuple[float, float] = (0.70, 0.95)
    rho_window: tuple[float, float] = (0.70, 0.95)
    x_threshold: float = 1e-3
    b_threshold: float = 1e-2
    n_x_intervals: int = 64
    n_y: int = 96
    n_rho: int = 96
    breakup_method: str = "delves"
    zero_tol: float = 1e-2
    max_condition: float = 1e12


def critical_angle(b: float, tau_x: float, y_max: float) -> float:
    """Polar angle beyond which finite-box breakup amplitudes are unconverged.

    ``b`` is a pair range in fm and ``y_max`` the mass-scaled box edge; in the
    ``alpha = arctan(y/x)`` convention the affected wedge is
    ``alpha > pi/2 - arctan(b tau_x / y_max)``.
    """
    return float(np.pi / 2 - np.arctan(b * tau_x / y_max))


def inscribed_box(rho_max: float, x_extent: float) -> tuple[float, float]:
    """Largest ``y_max`` with the corner ``(x_extent, y_max)`` on the circle ``rho = rho_max``."""
    if not 0 < x_extent < rho_max:
        raise ValueError("x extent must lie inside the polar grid")
    return float(x_extent), float(np.sqrt(rho_max**2 - x_extent**2))


def x_quadrature(x_max: float, n_intervals: int, order: int = 4) -> tuple[np.ndarray, np.ndarray]:
    s, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(0.0, x_max, n_intervals + 1)
    h = np.diff(edges)
    x = (edges[:-1, None] + 0.5 * h[:, None] * (s[None, :] + 1)).ravel()
    return x, (0.5 * h[:, None] * w[None, :]).ravel()


def resample_to_cartesian(f: RadialField, x, y) -> np.ndarray:
    """Values ``f_a(x, y)`` on the outer product grid, shape ``(n_x, n_y, n_c)``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    X, Y = np.meshgrid(x, y, indexing="ij")
    rho = np.hypot(X, Y)
    if np.any(rho > f.grid.rho.hi * (1 + 1e-12)):
        raise ValueError("Cartesian grid is not inscribed in the polar grid")
    return f(rho, np.arctan2(Y, X))


def project_bound(values: np.ndarray, phi_x: np.ndarray, wx: np.ndarray) -> np.ndarray:
    """``g(y) = <phi(x) | f(x, y)>`` with ``phi`` normalized on the same quadrature.

    ``values`` has shape ``(n_x, n_y, ...)``.
    """
    norm = np.sqrt(np.sum(wx * phi_x**2))
    return np.tensordot(wx * phi_x / norm, values, axes=(0, 0))


@dataclass
class AsymptoticFit:
    """``g(y) ~ c1 j(qy) + c2 h(qy) [+ c3 jj(y) + c4 hh(y)]``."""

    coeffs: np.ndarray
    residual: float
    condition: float
    window: tuple[float, float]

    @property
    def c1(self) -> complex:
        return complex(self.coeffs[0])

    @property
    def c2(self) -> complex:
        return complex(self.coeffs[1])

    @property
    def c3(self) -> complex | None:
        return complex(self.coeffs[2]) if self.coeffs.size > 2 else None

    @property
    def c4(self) -> complex | None:
        return complex(self.coeffs[3]) if self.coeffs.size > 3 else None

    def to_json(self) -> dict:
        return {"coeffs": [[float(f"{c.real:.17g}"), float(f"{c.imag:.17g}")] for c in self.coeffs],
                "residual": self.residual, "condition": self.condition, "window": list(self.window)}


def lstsq_qr(design: np.ndarray, data: np.ndarray, max_condition: float = 1e12):
    """Least squares through a thin QR; returns coefficients, relative residual, condition number."""
    cond = float(np.linalg.cond(design))
    if not np.isfinite(cond) or cond > max_condition:
        raise IllConditionedFitError(f"fit design matrix is ill conditioned (cond = {cond:.3e})", cond)
    Q, R = linalg.qr(design, mode="economic")
    c = linalg.solve_triangular(R, Q.conj().T @ data)
    r = design @ c - data
    scale = np.linalg.norm(data, axis=0)
    res = np.linalg.norm(r, axis=0) / np.where(scale > 0, scale, 1.0)
    return c, res, cond


def cylindrical_projections(y, x, wx, phi_x, k: float, incident) -> tuple[np.ndarray, np.ndarray]:
    """Deuteron projections of ``i(arctan(y/x)) J_0(k rho)`` and of the outgoing ``H_0`` analogue."""
    X, Y = np.meshgrid(x, y, indexing="ij")
    rho = np.hypot(X, Y)
    amp = incident(np.arctan2(Y, X))
    J = project_bound(amp * specfun.bessel_J(0, k * rho), phi_x, wx)
    H = project_bound(amp * specfun.outgoing_hankel0(k * rho), phi_x, wx)
    return J, H


def fit_plane_wave(g, y, q: float, x=None, wx=None, phi_x=None, k: float | None = None, incident=None,
                   max_condition: float = 1e12) -> AsymptoticFit:
    """Fit ``g(y)`` over the sampled window.

    Below breakup (``k`` is None) only ``j(qy)`` and the outgoing ``h(qy)``
    enter; above breakup the projected cylindrical terms are added.
    """
    y = np.asarray(y, dtype=float)
    cols = [specfun.riccati_j(0, q * y), specfun.outgoing_riccati(0, q * y)]
    if k is not None:
        if incident is None or x is None:
            raise ValueError("above breakup the fit needs the x quadrature and an incident function")
        cols += list(cylindrical_projections(y, x, wx, phi_x, k, incident))
    design = np.column_stack(cols).astype(complex)
    c, res, cond = lstsq_qr(design, np.asarray(g, dtype=complex), max_condition)
    return AsymptoticFit(c, float(res), cond, (float(y[0]), float(y[-1])))


@dataclass
class BreakupAmplitude:
    """``T(alpha)`` and ``C(alpha)`` at the hyperangular nodes of one channel."""

    alpha: np.ndarray
    T: np.ndarray
    C: np.ndarray
    residual: np.ndarray = field(repr=False)

    def combine(self, other: "BreakupAmplitude", a: complex, b: complex) -> "BreakupAmplitude":
        return BreakupAmplitude(self.alpha, a * self.T + b * other.T, a * self.C + b * other.C,
                                np.maximum(self.residual, other.residual))

    def regular_ratio(self, alpha_max: float = np.pi / 2) -> float:
        m = self.alpha <= alpha_max
        top = np.max(np.abs(self.T[m])) if np.any(m) else 0.0
        return float(np.max(np.abs(self.C[m])) / top) if top > 0 else 0.0


def extract_breakup(f: RadialField, channel: int, k: float, alpha, rho_window: tuple[float, float],
                    n_rho: int = 96, subtract=None, method: str = "delves") -> BreakupAmplitude:
    """``T(alpha)`` and ``C(alpha)`` of ``v_a - subtract`` over the ``rho`` window.

    ``method`` is ``"delves"`` (mode by mode, see ``extract_breakup_delves``)
    or ``"per_angle"``, a two-parameter fit to ``C J_0(k rho) + T i H_0(k rho)``
    at each node. The per-angle fit ignores the ``O(1/(k rho))`` corrections of
    the higher hyperangular modes and is kept for comparison.
    """
    if method == "delves":
        return extract_breakup_delves(f, channel, k, alpha, rho_window, n_rho, subtract)
    if method != "per_angle":
        raise ValueError(f"unknown breakup extraction method {method!r}")
    alpha = np.asarray(alpha, dtype=float)
    rho = np.linspace(rho_window[0], rho_window[1], n_rho)
    R, A = np.meshgrid(rho, alpha, indexing="ij")
    vals = f(R, A)[..., channel]
    if subtract is not None:
        vals = vals - subtract(R, A)
    design = np.column_stack([specfun.bessel_J(0, k * rho), specfun.outgoing_hankel0(k * rho)]).astype(complex)
    c, res, _ = lstsq_qr(design, vals)
    return BreakupAmplitude(alpha, c[1], c[0], res)


def extract_breakup_delves(f: RadialField, channel: int, k: float, alpha, rho_window: tuple[float, float],
                           n_rho: int = 96, subtract=None, order: int = 6) -> BreakupAmplitude:
    """Breakup amplitudes of ``v_a - subtract`` from its hyperangular Delves expansion.

    On each ``rho`` in the window the remainder is projected on the s-wave
    Delves functions ``D_n`` (Gauss-Legendre of ``order`` points per alpha
    spline interval). Each projection is fitted to
    ``a_n J_nu(k rho) + b_n i H_nu(k rho)``, ``nu = 2(n+1)``, and
    ``T = sum (-1)^(nu/2) b_n D_n``, ``C = sum (-1)^(nu/2) a_n D_n``. Only
    modes with ``nu <= k rho_lo`` are kept since higher ones are still
    evanescent in the window. The phase ``(-1)^(nu/2)`` makes every mode
    share the asymptotic form of the ``nu = 0`` Hankel function, so ``T``
    compares with a per-angle ``H_0`` fit.

    ``subtract(rho, alpha)`` returns the bound-plane-wave part to remove
    (broadcast arrays), or is None for channels without one. The returned
    residual holds the relative fit residual of each kept mode.
    """
    alpha = np.asarray(alpha, dtype=float)
    s, w = np.polynomial.legendre.leggauss(order)
    knots = f.grid.alpha.knots
    h = np.diff(knots)
    a_q = (knots[:-1, None] + 0.5 * h[:, None] * (s[None, :] + 1)).ravel()
    w_q = (0.5 * h[:, None] * w[None, :]).ravel()
    rho = np.linspace(rho_window[0], rho_window[1], n_rho)
    R, A = np.meshgrid(rho, a_q, indexing="ij")
    vals = f(R, A)[..., channel]
    if subtract is not None:
        vals = vals - subtract(R, A)
    T = np.zeros(alpha.size, complex)
    C = np.zeros(alpha.size, complex)
    res = []
    for n in range(max(int(k * rho_window[0]) // 2, 1)):
        nu = 2 * (n + 1)
        g = vals @ (w_q * specfun.delves_swave(n, a_q))
        J = specfun.bessel_J(nu, k * rho)
        H = 1j * specfun.hankel_plus(nu, k * rho)
        sj, sh = np.max(np.abs(J)), np.max(np.abs(H))
        c, r, _ = lstsq_qr(np.column_stack([J / sj, H / sh]).astype(complex), g.astype(complex))
        res.append(float(r))
        D = (-1) ** (nu // 2) * specfun.delves_swave(n, alpha)
        T += c[1] / sh * D
        C += c[0] / sj * D
    return BreakupAmplitude(alpha, T, C, np.asarray(res))


def bound_plane_wave(phi: BoundState, q: float, c1: complex, c2: complex):
    def wave(rho, alpha):
        x, y = rho * np.cos(alpha), rho * np.sin(alpha)
        return phi(x) * (c1 * specfun.riccati_j(0, q * y) + c2 * specfun.outgoing_riccati(0, q * y))
    return wave


@dataclass
class ColumnExtraction:
    """Asymptotic data of one solved incoming state (a row of the S-matrix)."""

    label: str
    fit: AsymptoticFit
    breakup: list[BreakupAmplitude]
    solve: SolveResult | None = field(default=None, repr=False)

    def combine(self, other: "ColumnExtraction", a: complex, b: complex, label: str) -> "ColumnExtraction":
        coeffs = a * self.fit.coeffs + b * other.fit.coeffs
        fit = AsymptoticFit(coeffs, max(self.fit.residual, other.fit.residual),
                            max(self.fit.condition, other.fit.condition), self.fit.window)
        br = [x.combine(y, a, b) for x, y in zip(self.breakup, other.breakup)]
        return ColumnExtraction(label, fit, br, self.solve)


def flux_factors(q: float, p: int) -> np.ndarray:
    """Flux per unit amplitude in mass-scaled coordinates: ``2q`` for ``phi h(qy)``, ``4/pi`` for ``H_0(k rho)``."""
    return np.array([2.0 * q] + [4.0 / np.pi] * p)


def reduced_mass_matrix(ms: kinematics.MassSystem, p: int, i: int = 1) -> np.ndarray:
    """Renormalization weights between (1+2) and (1+1+1) blocks; ones elsewhere."""
    _, mu_y, mu3 = kinematics.reduced_masses(ms, i)
    mu = np.ones((1 + p, 1 + p))
    mu[0, 1:] = np.sqrt(mu_y / mu3)
    mu[1:, 0] = np.sqrt(mu3 / mu_y)
    return mu


def build_smatrix(columns: list[ColumnExtraction], q: float, ms: kinematics.MassSystem,
                  quad: AlphaQuadrature | None = None, incident: np.ndarray | None = None) -> HybridSMatrix:
    """Assemble ``S = I + 2iT`` from the nd column and any (1+1+1) columns.

    Row 0 is the nd solution; row ``m >= 1`` the solution entering (1+1+1)
    channel ``m - 1`` with incident function ``incident[m - 1]``. Each (1+1+1)
    solution is first freed of its regular bound-plane-wave part by
    subtracting a multiple of the nd solution, and the nd solution is scaled
    so its regular part has unit amplitude. Amplitudes are then expressed per
    unit flux with the reduced-mass ratio taken out, and the reduced-mass
    matrix restores it (``S -> mu (.) S``).
    """
    if not columns:
        raise ValueError("no solved columns")
    nd = columns[0].combine(columns[0], 1.0 / (1.0 + columns[0].fit.c1), 0.0, columns[0].label)
    rows = [nd] + [col.combine(nd, 1.0, -col.fit.c1, col.label) for col in columns[1:]]
    N, p = len(rows), len(nd.breakup)
    if p and quad is None:
        raise ValueError("breakup amplitudes need an alpha quadrature")
    if N > 1 and (incident is None or incident.shape[0] < N - 1):
        raise ValueError("every (1+1+1) row needs its incident function")
    nq = quad.n if quad is not None else 0
    S_s = np.zeros((N, 1), dtype=complex)
    S_f = np.zeros((N, p, nq), dtype=complex)
    for m, r in enumerate(rows):
        S_s[m, 0] = (1.0 if m == 0 else 0.0) + 2j * r.fit.c2
        for a, b in enumerate(r.breakup):
            S_f[m, a] = 2j * b.T
        if m:
            S_f[m, m - 1] += incident[m - 1]
    F = flux_factors(q, p)
    mu = reduced_mass_matrix(ms, p)
    ri = np.arange(N)  # row m lives in channel index m of the (1 + p) list
    scale = np.sqrt(F[None, :] / F[ri, None]) / mu[ri]
    S_s *= scale[:, :1]
    S_f *= scale[:, 1:, None]
    S_s *= mu[ri, :1]
    S_f *= mu[ri, 1:, None]
    meta = {"partial": N != 1 + p, "rows": [r.label for r in rows]}
    return HybridSMatrix(S_s, S_f, quad, None if N == 1 else np.asarray(incident[: N - 1]), meta)


@dataclass
class EnergyResult:
    E: float
    E_lab: float
    S: HybridSMatrix
    columns: list[ColumnExtraction]
    defects: DefectReport | None
    alpha_c: float | None
    diagnostics: dict = field(default_factory=dict)

    @property
    def S11(self) -> complex:
        return complex(self.S.scalars[0, 0])

    def to_json(self) -> dict:
        def c(z):
            return [float(f"{z.real:.17g}"), float(f"{z.imag:.17g}")]

        rec = {
            "E": self.E, "E_lab": self.E_lab,
            "S11": c(self.S11), "abs_S11": abs(self.S11),
            "S": self.S.to_json(),
            "fits": {col.label: col.fit.to_json() for col in self.columns},
            "alpha_c": self.alpha_c,
            "diagnostics": self.diagnostics,
        }
        if self.defects is not None:
            rec["defects"] = self.defects.to_json()
        return rec

    def write(self, out_dir) -> list[Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        tag = f"E{self.E:+.6f}"
        paths = [out / f"smatrix_{tag}.json"]
        paths[0].write_text(json.dumps(self.to_json(), indent=1) + "\n", encoding="utf-8")
        for m, row in enumerate(self.S.meta.get("rows", [])):
            if not self.S.p:
                break
            path = out / f"breakup_{tag}_{row}.csv"
            col = self.columns[m]
            with path.open("w", newline="", encoding="utf-8") as fh:
                wr = csv.writer(fh, lineterminator="\n")
                wr.writerow(["channel", "alpha", "re_T", "im_T", "re_C", "im_C", "re_S", "im_S"])
                for a, br in enumerate(col.breakup):
                    for k, al in enumerate(br.alpha):
                        s = self.S.functions[m, a, k]
                        wr.writerow([a, f"{al:.17g}", f"{br.T[k].real:.17g}", f"{br.T[k].imag:.17g}",
                                     f"{br.C[k].real:.17g}", f"{br.C[k].imag:.17g}",
                                     f"{s.real:.17g}", f"{s.imag:.17g}"])
            paths.append(path)
        return paths


class Extractor:
    """Fits for all columns at one energy; owns the Cartesian box and its quadratures."""

    def __init__(self, setup: ScatteringSetup, E: float, fit: FitConfig = FitConfig()):
        self.setup, self.E, self.cfg = setup, float(E), fit
        self.q, k = setup.momenta(E)
        self.k = float(k.real) if E > 0 else None
        phi = setup.deuteron
        x_ext = potential_range(phi, fit.x_threshold)
        rho_max = setup.rho_max
        x_ext = min(x_ext, 0.6 * rho_max)
        self.x_max, self.y_max = inscribed_box(rho_max, x_ext)
        self.x, self.wx = x_quadrature(self.x_max, fit.n_x_intervals)
        self.phi_x = phi(self.x)
        self.y = np.linspace(fit.window[0] * self.y_max, fit.window[1] * self.y_max, fit.n_y)
        d = setup.data
        self.quad = AlphaQuadrature.from_basis(d.grid.alpha, setup.channels.w, setup.ms) if E > 0 else None
        tau_x, _ = kinematics.tau_factors(setup.ms, 1)
        b_fm = potential_range(phi, fit.b_threshold) / tau_x
        self.alpha_c = critical_angle(b_fm, tau_x, rho_max) if E > 0 else None

    def field(self, system: FaddeevSystem, result: SolveResult) -> RadialField:
        return RadialField(self.setup.grid, system.field(result.coefficients))

    def column(self, f: RadialField, label: str, incident=None, solve_result=None,
               image=None) -> ColumnExtraction:
        """Fits for one solved component.

        ``image(rho, alpha)``, given for a cylindrical-wave incoming state, is the
        bound-channel part of the free wave ``(1 + K) chi``. Its deuteron
        projection is regular and nonvanishing, and the scattered component
        cancels it, so it is added back before fitting; ``c3`` then measures
        only the spurious regular part.
        """
        bc = self.setup.bound_channel
        vals = resample_to_cartesian(f, self.x, self.y)[..., bc]
        if image is not None:
            X, Y = np.meshgrid(self.x, self.y, indexing="ij")
            vals = vals + image(np.hypot(X, Y), np.arctan2(Y, X))
        g = project_bound(vals, self.phi_x, self.wx)
        if self.k is None:
            fit = fit_plane_wave(g, self.y, self.q, max_condition=self.cfg.max_condition)
            return ColumnExtraction(label, fit, [], solve_result)
        fit = fit_plane_wave(g, self.y, self.q, self.x, self.wx, self.phi_x, self.k, incident,
                             self.cfg.max_condition)
        lo, hi = self.cfg.rho_window
        window = (lo * self.setup.rho_max, hi * self.setup.rho_max)
        sub = bound_plane_wave(self.setup.deuteron, self.q, fit.c1, fit.c2)
        breakup = [extract_breakup(f, a, self.k, self.quad.nodes, window, self.cfg.n_rho,
                                   sub if a == bc else None, self.cfg.breakup_method)
                   for a in range(self.setup.channels.n)]
        return ColumnExtraction(label, fit, breakup, solve_result)


def incident_scales(setup: ScatteringSetup, quad: AlphaQuadrature, count: int) -> list[float]:
    """Unit-flux scale of the ``n``-th s-wave Delves function entering channel ``n - 1``."""
    return [normalize_incident(specfun.delves_swave(n, quad.nodes), n, quad, setup.channels.n)
            for n in range(count)]


def scatter_energy(setup: ScatteringSetup, E: float, incoming=("nd", "nnp:1", "nnp:2"),
                   fit: FitConfig = FitConfig(), tol: float | None = None) -> EnergyResult:
    """Solve every requested incoming state at ``E`` and assemble the hybrid S-matrix.

    ``incoming`` items are ``"nd"`` or ``"nnp:n"``; (1+1+1) states are skipped
    below breakup. The nd state is always solved first since it fixes the
    regular-part renormalization of the others.
    """
    system = FaddeevSystem(setup, E)
    ex = Extractor(setup, E, fit)
    if any(s != "nd" and not s.startswith("nnp:") for s in incoming):
        raise ValueError(f"unknown incoming selector in {incoming!r}")
    wanted = [int(s.split(":")[1]) for s in incoming if s.startswith("nnp:")]
    if any(n < 1 or n > setup.channels.n for n in wanted):
        raise ValueError(f"nnp incident functions are numbered 1..{setup.channels.n}")
    # rows must enter channels 0, 1, ... in order, so fill up to the largest request
    nnp = list(range(1, max(wanted) + 1)) if wanted and E > 0 else []
    # the nd column's c3 fit needs the first scale even without (1+1+1) rows
    scales = incident_scales(setup, ex.quad, max(nnp, default=1)) if ex.k is not None else []
    first = (lambda a: scales[0] * specfun.delves_swave(0, a)) if ex.k is not None else None
    cols, diag = [], {}
    states: list[tuple[str, IncomingState, object, object]] = [("nd", incoming_nd(setup, E), first, None)]
    bc = setup.bound_channel
    for n in nnp:
        st = incoming_nnp(setup, E, n, scale=scales[n - 1])
        weight = st.kind.image_weights(setup)[bc]
        image = (lambda R, A, kind=st.kind, wt=weight: wt * kind.values(setup, R, A))
        states.append((f"nnp{n}", st, st.kind.incident, image))
    for label, st, inc, image in states:
        res = solve(system, build_rhs(setup, st, system.vtab), tol=tol)
        diag[label] = {"iterations": res.iterations, "residual": res.residual}
        log.info(json.dumps({"E": E, "column": label, **diag[label], "seconds": round(res.seconds, 3)}))
        cols.append(ex.column(ex.field(system, res), label, inc, res, image))
    incident = None
    if nnp:
        incident = np.zeros((len(nnp), ex.quad.n))
        for j, n in enumerate(nnp):
            incident[j] = scales[n - 1] * specfun.delves_swave(n - 1, ex.quad.nodes)
    S = build_smatrix(cols, ex.q, setup.ms, ex.quad, incident)
    complete = not S.meta["partial"] or E <= 0
    defects = DefectReport.of(S) if complete else None
    E_lab = float(cm_to_elab(E, setup.deuteron.energy))
    diag["gates"] = gate_report(cols, ex.alpha_c, fit.zero_tol) if ex.k is not None else {}
    return EnergyResult(float(E), E_lab, S, cols, defects, ex.alpha_c, diag)


def gate_report(cols: list[ColumnExtraction], alpha_c: float, zero_tol: float) -> dict:
    """Quality gates on the regular-part coefficients (reported, not enforced)."""
    out = {}
    for col in cols:
        c3 = abs(col.fit.c3) / abs(col.fit.c2) if col.fit.c2 else float("inf")
        ratios = [b.regular_ratio(alpha_c) for b in col.breakup]
        out[col.label] = {"c3_over_c2": c3, "c3_abs": abs(col.fit.c3), "C_over_T": ratios,
                          "c3_ok": c3 < zero_tol, "C_ok": all(r < 5 * zero_tol for r in ratios)}
    return out
