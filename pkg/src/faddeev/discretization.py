"""Cubic Hermite spline bases, grids and boundary conditions.

A basis on knots ``t_0 < ... < t_M`` has ``2(M+1)`` functions: a value spline
and a derivative spline per knot, stored in the order
``[v_0, d_0, v_1, d_1, ..., v_M, d_M]``. The expansion coefficients are then
the function values and derivatives at the knots. Orthogonal collocation uses
two Gauss-Legendre points per interval, so ``2M`` collocation conditions remain
once two boundary conditions have removed two degrees of freedom.

Boundary conditions are encoded by a column map ``P`` (``n_full x n``): the
retained basis function ``k`` is ``sum_f P[f, k] s_f``.
"""

from __future__ import annotations

from functools import cached_property
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

_GAUSS2 = np.array([0.5 - 0.5 / np.sqrt(3.0), 0.5 + 0.5 / np.sqrt(3.0)])


def _hermite_shapes(s: np.ndarray, h: np.ndarray, deriv: int) -> np.ndarray:
    """The four local shape functions (v_left, d_left, v_right, d_right) at ``s in [0, 1]``."""
    if deriv == 0:
        return np.stack([
            2 * s**3 - 3 * s**2 + 1,
            h * (s**3 - 2 * s**2 + s),
            -2 * s**3 + 3 * s**2,
            h * (s**3 - s**2),
        ], axis=-1)
    if deriv == 1:
        return np.stack([
            (6 * s**2 - 6 * s) / h,
            3 * s**2 - 4 * s + 1,
            (-6 * s**2 + 6 * s) / h,
            3 * s**2 - 2 * s,
        ], axis=-1)
    if deriv == 2:
        return np.stack([
            (12 * s - 6) / h**2,
            (6 * s - 4) / h,
            (-12 * s + 6) / h**2,
            (6 * s - 2) / h,
        ], axis=-1)
    if deriv == 3:
        one = np.ones_like(s)
        return np.stack([12 / h**3 * one, 6 / h**2 * one, -12 / h**3 * one, 6 / h**2 * one], axis=-1)
    raise ValueError("deriv must be 0..3")


@dataclass(frozen=True)
class SplineBasis1D:
    knots: np.ndarray
    P: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        knots = np.asarray(self.knots, dtype=float)
        if knots.ndim != 1 or knots.size < 2 or np.any(np.diff(knots) <= 0):
            raise ValueError("knots must be a strictly increasing 1D array")
        object.__setattr__(self, "knots", knots)
        if self.P is None:
            object.__setattr__(self, "P", np.eye(2 * knots.size))

    @property
    def n_intervals(self) -> int:
        return self.knots.size - 1

    @property
    def n_full(self) -> int:
        return 2 * self.knots.size

    @property
    def size(self) -> int:
        return self.P.shape[1]

    @property
    def lo(self) -> float:
        return float(self.knots[0])

    @property
    def hi(self) -> float:
        return float(self.knots[-1])

    def collocation_points(self) -> np.ndarray:
        h = np.diff(self.knots)
        return (self.knots[:-1, None] + h[:, None] * _GAUSS2[None, :]).ravel()

    def full_matrix(self, points, deriv: int = 0) -> np.ndarray:
        """Values of all ``n_full`` basis functions (columns) at ``points`` (rows)."""
        pts = np.atleast_1d(np.asarray(points, dtype=float))
        tol = 1e-12 * max(1.0, abs(self.hi))
        if np.any(pts < self.lo - tol) or np.any(pts > self.hi + tol):
            raise ValueError(f"points outside basis extent [{self.lo}, {self.hi}]")
        idx = np.clip(np.searchsorted(self.knots, pts, side="right") - 1, 0, self.n_intervals - 1)
        h = self.knots[idx + 1] - self.knots[idx]
        s = np.clip((pts - self.knots[idx]) / h, 0.0, 1.0)
        local = _hermite_shapes(s, h, deriv)
        out = np.zeros((pts.size, self.n_full))
        rows = np.arange(pts.size)
        for c in range(4):
            out[rows, 2 * idx + c] = local[:, c]
        return out

    def integral_matrix(self, points) -> np.ndarray:
        """Exact ``int_{t_0}^{t} s_k`` for the retained functions (columns) at ``points`` (rows)."""
        pts = np.atleast_1d(np.asarray(points, dtype=float))
        tol = 1e-12 * max(1.0, abs(self.hi))
        if np.any(pts < self.lo - tol) or np.any(pts > self.hi + tol):
            raise ValueError(f"points outside basis extent [{self.lo}, {self.hi}]")
        h_all = np.diff(self.knots)
        whole = np.zeros((self.knots.size, self.n_full))
        for i, h in enumerate(h_all):
            whole[i + 1] = whole[i]
            whole[i + 1, 2 * i:2 * i + 4] += [h / 2, h * h / 12, h / 2, -h * h / 12]
        idx = np.clip(np.searchsorted(self.knots, pts, side="right") - 1, 0, self.n_intervals - 1)
        h = h_all[idx]
        s = np.clip((pts - self.knots[idx]) / h, 0.0, 1.0)
        local = np.stack([
            h * (s**4 / 2 - s**3 + s),
            h * h * (s**4 / 4 - 2 * s**3 / 3 + s**2 / 2),
            h * (-(s**4) / 2 + s**3),
            h * h * (s**4 / 4 - s**3 / 3),
        ], axis=-1)
        out = whole[idx].copy()
        rows = np.arange(pts.size)
        for c in range(4):
            out[rows, 2 * idx + c] += local[:, c]
        return out @ self.P

    def local(self, points, deriv: int = 0) -> tuple[np.ndarray, np.ndarray]:
        """Sparse form of :meth:`full_matrix`: first full index and the 4 nonzero values per point."""
        pts = np.asarray(points, dtype=float).ravel()
        idx = np.clip(np.searchsorted(self.knots, pts, side="right") - 1, 0, self.n_intervals - 1)
        h = self.knots[idx + 1] - self.knots[idx]
        s = np.clip((pts - self.knots[idx]) / h, 0.0, 1.0)
        return 2 * idx, _hermite_shapes(s, h, deriv)

    def matrix(self, points, deriv: int = 0) -> np.ndarray:
        return self.full_matrix(points, deriv) @ self.P

    def evaluate(self, coeffs, points, deriv: int = 0):
        return self.matrix(points, deriv) @ np.asarray(coeffs)

    def quadrature(self, order: int = 4) -> tuple[np.ndarray, np.ndarray]:
        """Composite Gauss-Legendre nodes and weights over the knot intervals."""
        s, w = np.polynomial.legendre.leggauss(order)
        s = 0.5 * (s + 1.0)
        h = np.diff(self.knots)
        nodes = (self.knots[:-1, None] + h[:, None] * s[None, :]).ravel()
        weights = (h[:, None] * 0.5 * w[None, :]).ravel()
        return nodes, weights

    def drop(self, full_indices) -> "SplineBasis1D":
        """Remove the given full-basis functions (homogeneous Dirichlet / Neumann)."""
        keep = np.ones(self.n_full, dtype=bool)
        keep[np.asarray(full_indices, dtype=int)] = False
        P = self.P.copy()
        P[~keep, :] = 0.0
        cols = [k for k in range(P.shape[1]) if np.any(P[:, k] != 0)]
        return SplineBasis1D(self.knots, P[:, cols])

    def with_dirichlet(self, left: bool = True, right: bool = True) -> "SplineBasis1D":
        idx = []
        if left:
            idx.append(0)
        if right:
            idx.append(self.n_full - 2)
        return self.drop(idx)

    def with_log_derivative(self, L: complex) -> "SplineBasis1D":
        """Replace the two right-end functions ``v_M, d_M`` by ``v_M + L d_M``.

        Any function in the new span has ``f'(t_M) / f(t_M) = L``.
        """
        vi, di = self.n_full - 2, self.n_full - 1
        cols = [k for k in range(self.size) if self.P[vi, k] == 0 and self.P[di, k] == 0]
        tail = np.zeros((self.n_full, 1), dtype=np.result_type(self.P, complex(L)))
        tail[vi, 0] = 1.0
        tail[di, 0] = L
        P = np.hstack([self.P[:, cols].astype(tail.dtype), tail])
        return SplineBasis1D(self.knots, P)

    def hermite_coefficients(self, values, derivs) -> np.ndarray:
        """Reduced coefficients of the Hermite interpolant with the given knot data.

        The data must satisfy the boundary conditions encoded in ``P``.
        """
        full = np.empty((self.n_full,) + np.shape(values)[1:], dtype=np.result_type(values, derivs))
        full[0::2] = values
        full[1::2] = derivs
        coeffs, *_ = np.linalg.lstsq(self.P, full, rcond=None)
        return coeffs

    def dump_csv(self, path) -> None:
        Path(path).write_text("index,knot\n" + "".join(f"{i},{t:.17g}\n" for i, t in enumerate(self.knots)),
                              encoding="utf-8")


def blended_knots(extent: float, n_intervals: int, ratio: float = 5.0, growth: float = 1.05) -> np.ndarray:
    """Knots on ``[0, extent]`` whose spacing grows geometrically from ``h/ratio`` to a cap ``h``."""
    if extent <= 0 or n_intervals < 1:
        raise ValueError("extent must be positive and n_intervals >= 1")
    rel = np.minimum(growth ** np.arange(n_intervals) / ratio, 1.0)
    h = rel * (extent / rel.sum())
    knots = np.concatenate([[0.0], np.cumsum(h)])
    knots[-1] = extent
    return knots


def build_rho_grid(rho_max: float, n_rho: int, ratio: float = 5.0, growth: float = 1.05) -> SplineBasis1D:
    """Hyperradial basis with ``n_rho`` collocation points, regular at the origin.

    The value spline at ``rho = 0`` is dropped; the outer boundary condition is
    imposed later by :func:`apply_rho_boundary`, which brings the basis size to
    ``n_rho``.
    """
    if rho_max <= 0 or n_rho < 8 or n_rho % 2:
        raise ValueError("need rho_max > 0 and an even n_rho >= 8")
    basis = SplineBasis1D(blended_knots(rho_max, n_rho // 2, ratio, growth))
    return basis.drop([0])


def apply_rho_boundary(basis: SplineBasis1D, log_derivative: complex) -> SplineBasis1D:
    return basis.with_log_derivative(log_derivative)


def _equidistribute(grid: np.ndarray, density: np.ndarray, n_intervals: int) -> np.ndarray:
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (density[1:] + density[:-1]) * np.diff(grid))])
    targets = np.linspace(0.0, cum[-1], n_intervals + 1)
    knots = np.interp(targets, cum, grid)
    knots[0], knots[-1] = grid[0], grid[-1]
    return knots


def alpha_density(alpha: np.ndarray, phi_d, rho_max: float, floor: float = 1.0,
                  bound_fraction: float = 0.8, tail_weight: float = 0.6,
                  tail_decay: float = 0.27) -> np.ndarray:
    """Point density on ``[0, pi/2]`` resolving ``phi_d(rho_max cos(alpha))``.

    Two profiles in ``x = rho_max cos(alpha)`` are mapped to ``alpha`` and added:
    the local variation ``sqrt(|phi phi''| + phi'^2)`` of the bound state, and
    ``exp(-tail_decay gamma x)`` (``gamma`` its decay wavenumber), which covers the
    slower tails that distorted bound-channel waves develop. The profiles carry
    weights ``1`` and ``tail_weight``; together they get ``bound_fraction`` of
    the points, on top of a uniform floor.
    """
    x = rho_max * np.cos(alpha)
    dx = rho_max * np.sin(alpha)
    phi = phi_d(x)
    d1 = phi_d(x, deriv=1)
    d2 = phi_d(x, deriv=2)
    scale = np.max(np.abs(phi_d(phi_d.basis.collocation_points())))
    w = np.sqrt(np.abs(phi * d2) + d1**2) / scale * dx
    w_int = np.trapezoid(w, alpha)
    if w_int <= 0:
        return np.full_like(alpha, floor)
    gamma = np.sqrt(max(-phi_d.energy, 0.0))
    tail = np.exp(-tail_decay * gamma * x) * dx
    w = w / w_int + tail_weight * tail / np.trapezoid(tail, alpha)
    kernel = np.ones(9) / 9
    w = np.convolve(np.pad(w, 4, mode="edge"), kernel, mode="valid")
    span = alpha[-1] - alpha[0]
    w *= floor * span * bound_fraction / ((1 - bound_fraction) * np.trapezoid(w, alpha))
    return floor + w


def build_alpha_grid(n_alpha: int, phi_d=None, rho_max: float | None = None,
                     bound_fraction: float = 0.8) -> SplineBasis1D:
    """Hyperangular basis on ``[0, pi/2]`` with ``n_alpha`` collocation points.

    Components vanish at ``alpha = 0`` and ``alpha = pi/2`` (both value splines
    dropped). Without a bound state the knots are uniform.
    """
    if n_alpha < 16 or n_alpha % 2:
        raise ValueError("need an even n_alpha >= 16")
    m = n_alpha // 2
    if phi_d is None or rho_max is None:
        knots = np.linspace(0.0, np.pi / 2, m + 1)
    else:
        fine = np.linspace(0.0, np.pi / 2, 40 * m + 1)
        knots = _equidistribute(fine, alpha_density(fine, phi_d, rho_max, bound_fraction=bound_fraction), m)
    return SplineBasis1D(knots).with_dirichlet(True, True)


@dataclass(frozen=True)
class Grid2D:
    rho: SplineBasis1D
    alpha: SplineBasis1D

    @property
    def shape(self) -> tuple[int, int]:
        return self.rho.size, self.alpha.size

    def collocation_points(self) -> tuple[np.ndarray, np.ndarray]:
        return self.rho.collocation_points(), self.alpha.collocation_points()


def interpolate(grid: Grid2D, coeffs, rho, alpha, d_rho: int = 0, d_alpha: int = 0):
    """Pointwise tensor-spline evaluation; ``coeffs`` has shape ``(n_rho, n_alpha, ...)``."""
    rho = np.atleast_1d(np.asarray(rho, dtype=float))
    alpha = np.atleast_1d(np.asarray(alpha, dtype=float))
    rho, alpha = np.broadcast_arrays(rho, alpha)
    Er = grid.rho.matrix(rho.ravel(), d_rho)
    Ea = grid.alpha.matrix(alpha.ravel(), d_alpha)
    vals = np.einsum("pn,nm...,pm->p...", Er, np.asarray(coeffs), Ea, optimize=True)
    return vals.reshape(rho.shape + vals.shape[1:])


def resample(grid: Grid2D, coeffs, rho_points, alpha_points):
    """Tensor evaluation on the outer product ``rho_points x alpha_points``."""
    Er = grid.rho.matrix(rho_points)
    Ea = grid.alpha.matrix(alpha_points)
    return np.einsum("pn,nm...,qm->pq...", Er, np.asarray(coeffs), Ea, optimize=True)


@dataclass(frozen=True)
class RadialField:
    """Faddeev component ``f_a(rho, alpha)`` as tensor-spline coefficients.

    ``coeffs`` has shape ``(grid.rho.size, n_c, grid.alpha.size)``.
    """

    grid: Grid2D
    coeffs: np.ndarray = field(repr=False)

    @property
    def n_channels(self) -> int:
        return self.coeffs.shape[1]

    @cached_property
    def _full(self) -> np.ndarray:
        r, c, m = self.coeffs.shape
        Pr, Pa = self.grid.rho.P, self.grid.alpha.P
        tmp = (Pr @ self.coeffs.reshape(r, c * m)).reshape(-1, m)
        return (tmp @ Pa.T).reshape(Pr.shape[0], c, Pa.shape[0])

    def full_coefficients(self) -> np.ndarray:
        """Coefficients on the unconstrained Hermite bases, ``(n_full_rho, n_c, n_full_alpha)``."""
        return self._full

    def __call__(self, rho, alpha, d_rho: int = 0, d_alpha: int = 0) -> np.ndarray:
        """Values at the points ``(rho, alpha)`` (broadcast), shape ``points.shape + (n_c,)``.

        Uses the 4 x 4 local stencil of each point, so cost is linear in the
        number of points.
        """
        rho = np.asarray(rho, dtype=float)
        alpha = np.asarray(alpha, dtype=float)
        rho, alpha = np.broadcast_arrays(rho, alpha)
        rb, ab = self.grid.rho, self.grid.alpha
        tol = 1e-12
        if (np.any(rho < rb.lo - tol) or np.any(rho > rb.hi * (1 + tol)) or np.any(alpha < ab.lo - tol)
                or np.any(alpha > ab.hi + tol)):
            raise ValueError("evaluation point outside the polar grid")
        Cf = self.full_coefficients()
        ir, vr = rb.local(rho, d_rho)
        ia, va = ab.local(alpha, d_alpha)
        k = np.arange(4)
        block = Cf[ir[:, None, None] + k[None, :, None], :, ia[:, None, None] + k[None, None, :]]
        vals = np.einsum("pi,pj,pijc->pc", vr, va, block)
        return vals.reshape(rho.shape + (self.n_channels,))
