"""Sparse matrices of the discrete differential operators and complex checks.

The discrete Stokes complex is

    Lagrange P_{k+1}  --grad-->  W_k  --curl_h-->  CR  --div_h-->  P0

and its homogeneous counterpart.  Alongside it sits the edge/face row
Lagrange --grad--> Nedelec_k --curl--> RT0, linked to the first row by the
interpolations I^c (W -> Nedelec, identity on edge DOFs) and I^d (CR -> RT0).

A column of every operator matrix holds the target DOFs of the image of a
source basis function, read on one owner cell per target DOF.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from . import elements, poly
from .spaces import FeSpace, build_space, interpolate, lagrange_family

#: (source family, target family) -> differential operator
_ARROWS = {
    ("LagrangeP1", "W0"): "grad",
    ("LagrangeP2", "W1"): "grad",
    ("LagrangeP1", "Nedelec0"): "grad",
    ("LagrangeP2", "Nedelec1"): "grad",
    ("W0", "CrouzeixRaviartP1"): "curl",
    ("W1", "CrouzeixRaviartP1"): "curl",
    ("CrouzeixRaviartP1", "P0"): "div",
    ("Nedelec0", "RT0"): "curl",
    ("Nedelec1", "RT0"): "curl",
    ("W0", "Nedelec0"): "id",
    ("W1", "Nedelec1"): "id",
    ("CrouzeixRaviartP1", "RT0"): "id",
}


def _apply(op: str, coeffs: np.ndarray) -> np.ndarray:
    if op == "grad":
        return poly.gradient(coeffs)
    if op == "curl":
        return poly.curl(coeffs)
    if op == "div":
        return poly.divergence(coeffs)
    return coeffs


def _owner_mask(cell_dofs: np.ndarray) -> np.ndarray:
    """True at the first (cell, local) occurrence of each global DOF."""
    flat = cell_dofs.ravel()
    valid = flat >= 0
    _, first = np.unique(flat[valid], return_index=True)
    mask = np.zeros(flat.shape, dtype=bool)
    mask[np.flatnonzero(valid)[first]] = True
    return mask.reshape(cell_dofs.shape)


def complex_operator(source: FeSpace, target: FeSpace) -> sp.csr_matrix:
    """Matrix of the arrow ``source -> target`` in the discrete complexes."""
    if source.mesh is not target.mesh:
        raise ValueError("spaces live on different meshes")
    op = _ARROWS.get((source.family, target.family))
    if op is None:
        raise ValueError(f"no complex arrow from {source.family} to {target.family}")
    geom = source.mesh.geometry()
    image = _apply(op, source.basis().coeffs)
    L = elements.local_dofs(target.family, geom, image)  # (nT, nto, nfrom)
    L = L * target.cell_signs[:, :, None] * source.cell_signs[:, None, :]
    own = _owner_mask(target.cell_dofs)
    cols_ok = source.cell_dofs >= 0
    sel = own[:, :, None] & cols_ok[:, None, :]
    rows = np.broadcast_to(target.cell_dofs[:, :, None], L.shape)[sel]
    cols = np.broadcast_to(source.cell_dofs[:, None, :], L.shape)[sel]
    vals = L[sel]
    keep = vals != 0
    M = sp.coo_matrix((vals[keep], (rows[keep], cols[keep])), shape=(target.n_coeffs, source.n_coeffs))
    M.sum_duplicates()
    return M.tocsr()


def numerical_rank(M, tol: float = 1e-9) -> int:
    """Rank from the singular values of the dense matrix (small meshes only)."""
    A = M.toarray() if sp.issparse(M) else np.asarray(M)
    if min(A.shape) == 0:
        return 0
    s = np.linalg.svd(A, compute_uv=False)
    return int(np.sum(s > tol * max(s[0], 1.0)))


@dataclass
class ComplexReport:
    n: int
    k: int
    bc: str
    dims: dict
    ranks: dict
    expected: dict
    residuals: dict
    checks: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def to_text(self) -> str:
        lines = [f"n={self.n}", f"k={self.k}", f"bc={self.bc}"]
        for group in ("dims", "ranks", "expected", "residuals"):
            for key, val in getattr(self, group).items():
                fmt = f"{val:.3e}" if isinstance(val, float) else str(val)
                lines.append(f"{group[:-1] if group != 'residuals' else 'residual'}.{key}={fmt}")
        for key, ok in self.checks.items():
            lines.append(f"check.{key}={'pass' if ok else 'FAIL'}")
        lines.append(f"status={'pass' if self.passed else 'FAIL'}")
        return "\n".join(lines)


def complex_spaces(mesh, k: int, bc: str = "none"):
    """(V^g, W, V^s, Q) spaces of the discrete Stokes complex."""
    return (
        build_space(mesh, lagrange_family(k), bc),
        build_space(mesh, elements.w_family(k), bc),
        build_space(mesh, "CrouzeixRaviartP1", bc),
        build_space(mesh, "P0", bc),
    )


def verify_exactness(mesh, k: int, bc: str = "none", n: int | None = None, tol: float = 1e-12) -> ComplexReport:
    """Rank and composition checks of the discrete Stokes complex."""
    G, W, S, Q = complex_spaces(mesh, k, bc)
    Dg = complex_operator(G, W)
    Dc = complex_operator(W, S)
    Dd = complex_operator(S, Q)
    res = {
        "curl_grad": float(abs(Dc @ Dg).max()) if Dg.nnz else 0.0,
        "div_curl": float(abs(Dd @ Dc).max()) if Dc.nnz else 0.0,
    }
    rg, rc, rd = numerical_rank(Dg), numerical_rank(Dc), numerical_rank(Dd)
    V, E, F, T = mesh.n_vertices, mesh.n_edges, mesh.n_faces, mesh.n_cells
    dims = {"Vg": G.dim, "W": W.dim, "Vs": S.dim, "Q": Q.dim}
    ranks = {"grad": rg, "curl": rc, "div": rd,
             "ker_grad": G.n_coeffs - rg, "ker_curl": W.dim - rc, "ker_div": S.dim - rd}
    if bc == "none":
        expected = {"grad": G.dim - 1, "curl": E + 2 * F - V + 1, "div": T, "ker_div": 3 * F - T}
    else:
        expected = {"grad": G.dim, "curl": W.dim - G.dim, "div": T - 1, "ker_div": S.dim - (T - 1)}
    checks = {
        "curl_grad_zero": res["curl_grad"] < tol,
        "div_curl_zero": res["div_curl"] < tol,
        "grad_rank": rg == expected["grad"],
        "ker_curl_eq_range_grad": ranks["ker_curl"] == rg,
        "curl_rank": rc == expected["curl"],
        "range_curl_eq_ker_div": rc == ranks["ker_div"] == expected["ker_div"],
        "div_onto": rd == Q.dim,
    }
    return ComplexReport(n or 0, k, bc, dims, ranks, expected, res, checks)


def edge_face_spaces(mesh, k: int, bc: str = "none"):
    """(V^g, Nedelec_k, RT0) spaces of the conforming row."""
    return (
        build_space(mesh, lagrange_family(k), bc),
        build_space(mesh, elements.NEDELEC_FAMILIES[k], bc),
        build_space(mesh, "RT0", bc),
    )


def verify_commuting(mesh, k: int, vfield, sfield=None, degree: int | None = None) -> dict:
    """Coefficient max-norm residuals of the commuting diagrams.

    ``vfield`` is a vector field (``PolyField`` or any object with
    ``value``, ``curl``, ``div`` and field-valued ``curl_field`` /
    ``div_field``); ``sfield`` an optional scalar field with
    ``gradient_field``.
    """
    G, W, S, Q = complex_spaces(mesh, k)
    _, N, R = edge_face_spaces(mesh, k)
    out = {}
    Ic_v = interpolate(W, vfield, degree).coeffs
    curl_f = vfield.curl_field()
    out["curl"] = _maxabs(complex_operator(W, S) @ Ic_v - interpolate(S, curl_f, degree).coeffs)
    Is_v = interpolate(S, vfield, degree).coeffs
    out["div"] = _maxabs(complex_operator(S, Q) @ Is_v - interpolate(Q, vfield.div_field(), degree).coeffs)
    In_v = interpolate(N, vfield, degree).coeffs
    out["nedelec_curl"] = _maxabs(complex_operator(N, R) @ In_v - interpolate(R, curl_f, degree).coeffs)
    if sfield is not None:
        q = interpolate(G, sfield, degree).coeffs
        grad_f = sfield.gradient_field()
        out["grad"] = _maxabs(complex_operator(G, W) @ q - interpolate(W, grad_f, degree).coeffs)
        out["nedelec_grad"] = _maxabs(complex_operator(G, N) @ q - interpolate(N, grad_f, degree).coeffs)
    return out


def third_row_residual(mesh, k: int, coeffs: np.ndarray, bc: str = "hom") -> float:
    """max |curl(I^c v_h) - I^d(curl_h v_h)| for W coefficient vectors (columns)."""
    _, W, S, _ = complex_spaces(mesh, k, bc)
    _, N, R = edge_face_spaces(mesh, k, bc)
    lhs = complex_operator(N, R) @ (complex_operator(W, N) @ coeffs)
    rhs = complex_operator(S, R) @ (complex_operator(W, S) @ coeffs)
    return _maxabs(lhs - rhs)


def _maxabs(x) -> float:
    x = np.asarray(x)
    return float(np.abs(x).max()) if x.size else 0.0
