"""Algebra of the hybrid scattering matrix.

Entries ending in a (1+2) channel are complex numbers; entries ending in a
(1+1+1) channel are complex functions of the polar angle, tabulated at the
hyperangular collocation points (two Gauss points per interval, so the
interval weights ``h/2`` integrate the spline interpolant's products to fourth
order).

The pairing of two entries integrates over ``alpha`` and applies the Jacobi
transform to its second argument. For the (1+1+1) block the transform mixes
channels through the recoupling weights, so the pairing of a row with a
column is evaluated at block level: ``sum_a int f_a (g + (w (x) k) g)_a``.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import kinematics
from .discretization import SplineBasis1D
from .operators import jacobi_kernel_matrix


@dataclass(frozen=True)
class AlphaQuadrature:
    """Nodes, weights and the recoupled Jacobi kernel acting on tabulated values.

    ``kernel`` has shape ``(p n, p n)`` for ``p`` (1+1+1) channels and ``n``
    nodes; it maps values of ``g_b`` to values of ``sum_b w_ab k[g_b]``.
    """

    nodes: np.ndarray
    weights: np.ndarray
    kernel: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return self.nodes.size

    @classmethod
    def from_basis(cls, basis: SplineBasis1D, w: np.ndarray, ms: kinematics.MassSystem) -> "AlphaQuadrature":
        nodes = basis.collocation_points()
        h = np.repeat(np.diff(basis.knots), 2)
        B = basis.matrix(nodes)
        J = jacobi_kernel_matrix(basis, nodes, ms) @ np.linalg.inv(B)
        return cls(nodes, h / 2, np.kron(np.asarray(w, dtype=float), J))

    def integrate(self, f) -> complex:
        return complex(np.sum(self.weights * f, axis=-1))

    def transform(self, G: np.ndarray) -> np.ndarray:
        """Recoupled transform of a channel vector of functions ``(p, n)``."""
        p = G.shape[0]
        return (self.kernel @ G.reshape(p * self.n)).reshape(p, self.n)

    def compatible(self, other: "AlphaQuadrature", rtol: float = 1e-12) -> bool:
        return (self.nodes.shape == other.nodes.shape and np.allclose(self.nodes, other.nodes, rtol=rtol)
                and np.allclose(self.weights, other.weights, rtol=rtol))


def hybrid_inner(a, b, quad: AlphaQuadrature | None = None, channel: int = 0) -> complex:
    """Pairing of two single entries (scalar or tabulated function).

    ``<c, d> = c d``; ``<c, g> = c int (g + J g)``; ``<f, d> = d int f``;
    ``<f, g> = int f (g + J g)``. For a single entry ``J`` is the diagonal
    recoupling block of ``channel``.
    """
    fa, fb = np.ndim(a) > 0, np.ndim(b) > 0
    if not fa and not fb:
        return complex(a) * complex(b)
    if quad is None:
        raise ValueError("a quadrature is needed when an operand is a function of alpha")
    for x in (a, b):
        if np.ndim(x) and np.shape(x) != (quad.n,):
            raise ValueError("function operand does not match the quadrature grid")
    if fb:
        p = quad.kernel.shape[0] // quad.n
        G = np.zeros((p, quad.n), dtype=complex)
        G[channel] = b
        gj = np.asarray(b) + quad.transform(G)[channel]
        return quad.integrate((a if fa else complex(a)) * gj)
    return complex(b) * quad.integrate(a)


@dataclass
class HybridSMatrix:
    """Rows index incoming states, columns outgoing channels.

    ``scalars[m, j]`` holds the entries of the ``n`` (1+2) columns;
    ``functions[m, a]`` the tabulated entries of the ``p`` (1+1+1) columns.
    ``incident`` holds the incident functions ``i_a(alpha)`` of the (1+1+1)
    rows (row ``n + a`` enters in channel ``a``).
    """

    scalars: np.ndarray
    functions: np.ndarray
    quad: AlphaQuadrature | None
    incident: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.scalars.shape[1]

    @property
    def p(self) -> int:
        return self.functions.shape[1]

    @property
    def rows(self) -> int:
        return self.scalars.shape[0]

    def dagger(self) -> "HybridDual":
        return HybridDual(self.scalars.conj().T, self.functions.conj().transpose(1, 0, 2))

    def transpose(self) -> "HybridDual":
        return HybridDual(self.scalars.T.copy(), self.functions.transpose(1, 0, 2).copy())

    @classmethod
    def incidence(cls, n: int, incident: np.ndarray | None, quad: AlphaQuadrature | None) -> "HybridSMatrix":
        """The matrix of incident functions: 1 on the (1+2) diagonal, ``i_a`` on the (1+1+1) one."""
        p = 0 if incident is None else incident.shape[0]
        nq = 0 if quad is None else quad.n
        S = np.zeros((n + p, n), dtype=complex)
        S[:n, :n] = np.eye(n)
        F = np.zeros((n + p, p, nq), dtype=complex)
        for a in range(p):
            F[n + a, a] = incident[a]
        return cls(S, F, quad, incident)

    def permuted(self, order) -> "HybridSMatrix":
        """Relabel the (1+1+1) channels (rows and columns together)."""
        order = list(order)
        rows = list(range(self.n)) + [self.n + o for o in order]
        F = self.functions[rows][:, order]
        quad = self.quad
        if quad is not None:
            idx = np.concatenate([np.arange(o * quad.n, (o + 1) * quad.n) for o in order])
            quad = AlphaQuadrature(quad.nodes, quad.weights, quad.kernel[np.ix_(idx, idx)])
        inc = None if self.incident is None else self.incident[order]
        return HybridSMatrix(self.scalars[rows], F, quad, inc, dict(self.meta))

    def to_json(self) -> dict:
        def c(z):
            return [float(f"{z.real:.17g}"), float(f"{z.imag:.17g}")]

        out = {
            "n_bound_channels": self.n,
            "n_breakup_channels": self.p,
            "scalars": [[c(z) for z in row] for row in self.scalars],
            "functions": [[[c(z) for z in f] for f in row] for row in self.functions],
            "meta": self.meta,
        }
        if self.quad is not None:
            out["alpha_nodes"] = [float(f"{a:.17g}") for a in self.quad.nodes]
            out["alpha_weights"] = [float(f"{a:.17g}") for a in self.quad.weights]
            out["kernel"] = [[float(f"{v:.17g}") for v in row] for row in self.quad.kernel]
        if self.incident is not None:
            out["incident"] = [[c(z) for z in f] for f in self.incident]
        return out

    @classmethod
    def from_json(cls, data: dict) -> "HybridSMatrix":
        try:
            def arr(x):
                a = np.asarray(x, dtype=float)
                return a[..., 0] + 1j * a[..., 1] if a.size else np.zeros(a.shape[:-1] or (0,), dtype=complex)

            n, p = int(data["n_bound_channels"]), int(data["n_breakup_channels"])
            S = arr(data["scalars"]).reshape(-1, n)
            quad = None
            if p:
                quad = AlphaQuadrature(np.asarray(data["alpha_nodes"], dtype=float),
                                       np.asarray(data["alpha_weights"], dtype=float),
                                       np.asarray(data["kernel"], dtype=float))
            F = (arr(data["functions"]).reshape(S.shape[0], p, quad.n) if p
                 else np.zeros((S.shape[0], 0, 0), dtype=complex))
            inc = arr(data["incident"]) if "incident" in data else None
        except (KeyError, TypeError, ValueError, IndexError) as exc:
            raise ValueError(f"malformed S-matrix record: {exc}") from exc
        if quad is not None and quad.kernel.shape != (p * quad.n, p * quad.n):
            raise ValueError("kernel shape does not match the stored alpha grid")
        return cls(S, F, quad, inc, data.get("meta", {}))


@dataclass
class HybridDual:
    """Right operand of a star product: rows index channels (``n`` scalar rows, then ``p`` function rows)."""

    scalars: np.ndarray
    functions: np.ndarray


def star_product(A: HybridSMatrix, B: HybridDual) -> np.ndarray:
    """``(A * B)_mn = sum_k <A_mk, B_kn>`` with the block-level transform on the (1+1+1) rows of ``B``."""
    if A.scalars.shape[1] != B.scalars.shape[0] or A.functions.shape[1] != B.functions.shape[0]:
        raise ValueError("inner dimensions of the star product do not match")
    out = A.scalars @ B.scalars
    if A.p:
        q = A.quad
        cols = B.functions.shape[1]
        G = B.functions + np.stack([q.transform(B.functions[:, j]) for j in range(cols)], axis=1)
        out = out + np.einsum("mak,ank,k->mn", A.functions, G, q.weights)
    return out


def normalize_incident(f: np.ndarray, channel: int, quad: AlphaQuadrature, n_channels: int) -> float:
    """Scale making ``<i, i> = 1`` for ``i = scale * f`` entering in ``channel``."""
    G = np.zeros((n_channels, quad.n), dtype=complex)
    G[channel] = f
    flux = quad.integrate(f * (G + quad.transform(G))[channel])
    if abs(flux) < 1e-300 or flux.real <= 0:
        raise ValueError("incident function carries no positive flux")
    return float(1.0 / np.sqrt(flux.real))


def unitarity_matrix(S: HybridSMatrix) -> np.ndarray:
    return star_product(S, S.dagger())


def unitarity_defect(S: HybridSMatrix) -> float:
    """``|| 1 - S * S^dagger ||_F``."""
    U = unitarity_matrix(S)
    return float(np.linalg.norm(np.eye(U.shape[0]) - U))


def reciprocity_matrix(S: HybridSMatrix) -> np.ndarray:
    I = HybridSMatrix.incidence(S.n, S.incident, S.quad)
    return star_product(I, S.transpose())


def reciprocity_defect(S: HybridSMatrix) -> float:
    """``||calS - calS^T|| / ||calS + calS^T||`` with ``calS = I * S^T``."""
    R = reciprocity_matrix(S)
    den = np.linalg.norm(R + R.T)
    return float(np.linalg.norm(R - R.T) / den) if den else 0.0


@dataclass
class DefectReport:
    eta_U: float
    eta_R: float
    unitarity: np.ndarray = field(repr=False)
    reciprocity: np.ndarray = field(repr=False)

    @classmethod
    def of(cls, S: HybridSMatrix) -> "DefectReport":
        U = unitarity_matrix(S)
        R = reciprocity_matrix(S)
        den = np.linalg.norm(R + R.T)
        return cls(float(np.linalg.norm(np.eye(U.shape[0]) - U)),
                   float(np.linalg.norm(R - R.T) / den) if den else 0.0,
                   np.eye(U.shape[0]) - U, R - R.T)

    def to_json(self) -> dict:
        def m(a):
            return [[[float(f"{z.real:.17g}"), float(f"{z.imag:.17g}")] for z in row] for row in a]

        return {"eta_U": self.eta_U, "eta_R": self.eta_R,
                "unitarity_residual": m(self.unitarity), "reciprocity_residual": m(self.reciprocity)}


def write_scan_csv(path, records) -> None:
    """``records``: iterable of dicts with at least ``E``, ``eta_U``, ``eta_R``."""
    records = list(records)
    keys = ["E", "eta_U", "eta_R"]
    extra = [k for r in records for k in r if k not in keys]
    keys += list(dict.fromkeys(extra))
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        wr = csv.DictWriter(fh, fieldnames=keys, lineterminator="\n")
        wr.writeheader()
        for r in records:
            wr.writerow({k: (f"{r[k]:.17g}" if isinstance(r.get(k), float) else r.get(k, "")) for k in keys})


def load_smatrix(path) -> HybridSMatrix:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValueError(f"{path}: not a complete JSON document ({exc})") from exc
    return HybridSMatrix.from_json(data.get("S", data))
