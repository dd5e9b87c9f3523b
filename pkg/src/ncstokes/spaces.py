"""Global finite element spaces: DOF numbering, boundary conditions, interpolation.

Global DOFs are ordered edge DOFs (by edge id, then moment index), face
DOFs (by face id, then component), then cell DOFs.  Homogeneous spaces
drop boundary DOFs from the numbering; the zero-mean P0 space keeps all
cell coefficients and only reports ``dim = #T - 1``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import elements
from .elements import LocalBasis
from .mesh import Mesh, classify_boundary

KIND_ALIASES = {
    "lagrange1": "LagrangeP1", "lagrange2": "LagrangeP2", "w0": "W0", "w1": "W1",
    "cr": "CrouzeixRaviartP1", "p0": "P0", "nedelec0": "Nedelec0", "nedelec1": "Nedelec1",
    "rt0": "RT0",
}


def lagrange_family(k: int) -> str:
    return "LagrangeP2" if k == 1 else "LagrangeP1"


def _canonical_family(kind: str) -> str:
    if kind in elements.FAMILIES:
        return kind
    try:
        return KIND_ALIASES[kind.lower()]
    except KeyError:
        raise ValueError(f"unknown space kind {kind!r}") from None


def _full_numbering(mesh: Mesh, family: str, bnd):
    """Cell-to-DOF table over the unreduced numbering and its boundary mask."""
    nE, nF, nT = mesh.n_edges, mesh.n_faces, mesh.n_cells
    ce, cf = mesh.cell_edges, mesh.cell_faces
    if family in ("W0", "W1"):
        k = int(family[-1])
        edge = (ce[:, :, None] * (k + 1) + np.arange(k + 1)).reshape(nT, -1)
        face = (nE * (k + 1) + 2 * cf[:, :, None] + np.arange(2)).reshape(nT, -1)
        mask = np.concatenate([np.repeat(bnd.edges, k + 1), np.repeat(bnd.faces, 2)])
        return np.concatenate([edge, face], axis=1), mask
    if family == "LagrangeP1":
        return mesh.canonical_cells.copy(), bnd.vertices.copy()
    if family == "LagrangeP2":
        table = np.concatenate([mesh.canonical_cells, mesh.n_vertices + ce], axis=1)
        return table, np.concatenate([bnd.vertices, bnd.edges])
    if family == "CrouzeixRaviartP1":
        return (3 * cf[:, :, None] + np.arange(3)).reshape(nT, -1), np.repeat(bnd.faces, 3)
    if family == "P0":
        return np.arange(nT)[:, None], np.zeros(nT, dtype=bool)
    if family in ("Nedelec0", "Nedelec1"):
        k = int(family[-1])
        return (ce[:, :, None] * (k + 1) + np.arange(k + 1)).reshape(nT, -1), np.repeat(bnd.edges, k + 1)
    if family == "RT0":
        return cf.copy(), bnd.faces.copy()
    raise ValueError(f"unknown family {family!r}")


@dataclass(frozen=True)
class FeSpace:
    mesh: Mesh
    family: str
    bc: str  # "none" | "hom"
    cell_dofs: np.ndarray  # (nT, nloc) global index, -1 for removed DOFs
    cell_signs: np.ndarray  # (nT, nloc) orientation factor, 0 for removed DOFs
    n_coeffs: int  # length of coefficient vectors
    full_to_reduced: np.ndarray  # (n_full,) reduced index or -1
    zero_mean: bool = False
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def dim(self) -> int:
        return self.n_coeffs - 1 if self.zero_mean else self.n_coeffs

    @property
    def is_vector(self) -> bool:
        return self.family in elements.VECTOR_FAMILIES

    @property
    def n_local(self) -> int:
        return self.cell_dofs.shape[1]

    @property
    def k(self) -> int:
        return int(self.family[-1]) if self.family[-1].isdigit() else 0

    def basis(self) -> LocalBasis:
        """Local bases of all cells (cached); orientation signs not applied."""
        if "basis" not in self._cache:
            self._cache["basis"] = elements.aux_basis(self.family, self.mesh.geometry())
        return self._cache["basis"]

    def global_coeffs(self) -> np.ndarray:
        """Polynomial coefficients of the global basis restricted to each cell.

        Shape (nT, nloc, [3,] 10); removed DOFs get zero rows.
        """
        c = self.basis().coeffs
        s = self.cell_signs.astype(float)
        return c * s.reshape(s.shape + (1,) * (c.ndim - 2))

    def zeros(self) -> "FeFunction":
        return FeFunction(self, np.zeros(self.n_coeffs))


def build_space(mesh: Mesh, kind: str, bc: str = "none") -> FeSpace:
    """Build a global space of the given element kind.

    ``kind`` is an element family name (``"W0"``, ``"LagrangeP2"``, ...) or
    a short alias (``"w0"``, ``"cr"``, ``"p0"``...).  ``bc="hom"`` drops
    every DOF on the boundary; for ``P0`` it selects the zero-mean subspace.
    """
    if bc not in ("none", "hom"):
        raise ValueError(f"bc must be 'none' or 'hom', got {bc!r}")
    family = _canonical_family(kind)
    bnd = classify_boundary(mesh)
    table, bmask = _full_numbering(mesh, family, bnd)
    keep = ~bmask if bc == "hom" else np.ones_like(bmask)
    f2r = np.full(len(bmask), -1, dtype=np.int64)
    f2r[keep] = np.arange(int(keep.sum()))
    cell_dofs = f2r[table]
    signs = elements.local_signs(family, mesh.geometry()) * (cell_dofs >= 0)
    return FeSpace(
        mesh=mesh, family=family, bc=bc, cell_dofs=cell_dofs, cell_signs=signs.astype(int),
        n_coeffs=int(keep.sum()), full_to_reduced=f2r, zero_mean=(family == "P0" and bc == "hom"),
    )


@dataclass
class FeFunction:
    space: FeSpace
    coeffs: np.ndarray

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=float)
        if self.coeffs.shape != (self.space.n_coeffs,):
            raise ValueError(
                f"coefficient vector has shape {self.coeffs.shape}, expected ({self.space.n_coeffs},)"
            )

    def local_coeffs(self) -> np.ndarray:
        """Coefficients of the local basis on every cell, (nT, nloc)."""
        cd = self.space.cell_dofs
        vals = np.where(cd >= 0, self.coeffs[np.maximum(cd, 0)], 0.0)
        return vals * self.space.cell_signs

    def cell_poly(self) -> np.ndarray:
        """The function on each cell as a P2 polynomial in y = x - x_K."""
        c = self.space.basis().coeffs
        return np.einsum("cb,cb...->c...", self.local_coeffs(), c)

    def _check(self, cells, bary):
        bary = np.atleast_2d(np.asarray(bary, dtype=float))
        if bary.shape[1] != 4 or np.any(bary < -1e-12) or np.any(np.abs(bary.sum(axis=1) - 1) > 1e-12):
            raise ValueError("points must be barycentric coordinates inside the closed cell")
        cells = np.arange(self.space.mesh.n_cells) if cells is None else np.atleast_1d(cells)
        return cells, bary

    def evaluate(self, bary, cells=None, what: str = "value") -> np.ndarray:
        """Values (nc, nq[, 3]) at barycentric points on ``cells`` (default all).

        ``what`` is ``"value"``, ``"curl"``, ``"div"``, ``"grad"`` or
        ``"grad_curl"`` (the latter returns one constant (3, 3) per cell).
        """
        from . import poly

        cells, bary = self._check(cells, bary)
        p = self.cell_poly()[cells]
        geom = self.space.mesh.geometry().take(cells)
        y = geom.to_physical(bary) - geom.barycenter[:, None, :]
        if what == "value":
            q = p
        elif what == "curl":
            q = poly.curl(p)
        elif what == "div":
            q = poly.divergence(p)
        elif what == "grad":
            q = poly.gradient(p)
        elif what == "grad_curl":
            return poly.jacobian_of_linear(poly.curl(p))
        else:
            raise ValueError(f"unknown evaluation {what!r}")
        return poly.evaluate(q[:, None], y)[:, :, 0]


def interpolate(space: FeSpace, f, degree: int | None = None) -> FeFunction:
    """Nodal interpolant: coefficients are the DOF values of ``f``.

    ``f`` is an analytic field exposing ``value`` (and ``curl`` for W
    spaces).  Each DOF is read on one cell containing its entity; for a
    globally smooth field all cells agree.  Boundary DOFs of homogeneous
    spaces are dropped.  For the zero-mean P0 space the mean is removed.
    """
    geom = space.mesh.geometry()
    loc = elements.local_dofs(space.family, geom, f, degree=degree)[..., 0]
    loc = loc * elements.local_signs(space.family, geom)
    out = np.zeros(space.n_coeffs)
    cd = space.cell_dofs
    m = cd >= 0
    out[cd[m]] = loc[m]
    if space.zero_mean:
        out -= np.dot(out, geom.volume) / geom.volume.sum()
    return FeFunction(space, out)


def interpolate_local(space: FeSpace, local_values: np.ndarray) -> FeFunction:
    """Assemble per-cell local DOF values (nT, nloc), taking the last writer."""
    loc = local_values * elements.local_signs(space.family, space.mesh.geometry())
    out = np.zeros(space.n_coeffs)
    m = space.cell_dofs >= 0
    out[space.cell_dofs[m]] = loc[m]
    return FeFunction(space, out)
