"""Tetrahedral meshes of the unit cube and per-cell affine geometry.

Conventions
-----------
* Edges are stored as ``(low, high)`` vertex pairs; the global tangent
  ``t_e`` points from the lower to the higher vertex id.
* Faces are stored as ascending vertex triples ``(a, b, c)``; the global
  normal ``n_F`` is ``(x_b - x_a) x (x_c - x_a)`` normalised.
* ``Mesh.cells`` keeps every tetrahedron positively oriented.  All local
  numbering (local edges, local faces, element bases) uses the *canonical*
  local order, i.e. the cell's vertices sorted by global id.  Under that order
  local edge ``(i, j)`` with ``i < j`` is always aligned with ``t_e`` and the
  local face opposite vertex ``l`` lists its vertices in global order, so only
  face normals need a sign.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

#: local edges (i, j) of the canonical cell, i < j
LOCAL_EDGES = np.array([(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)])
#: local face l is opposite local vertex l; its vertices in ascending order
LOCAL_FACES = np.array([[j for j in range(4) if j != l] for l in range(4)])
#: local edges of each local face, as indices into LOCAL_EDGES
LOCAL_FACE_EDGES = np.array(
    [[next(e for e, (a, b) in enumerate(LOCAL_EDGES) if {a, b} == {f[p], f[q]})
      for p, q in ((0, 1), (0, 2), (1, 2))] for f in LOCAL_FACES]
)


@dataclass(frozen=True)
class Mesh:
    vertices: np.ndarray  # (nV, 3)
    cells: np.ndarray  # (nT, 4), positively oriented
    edges: np.ndarray  # (nE, 2), low -> high
    faces: np.ndarray  # (nF, 3), ascending
    cell_edges: np.ndarray  # (nT, 6) global edge of each canonical local edge
    cell_faces: np.ndarray  # (nT, 4) global face opposite canonical vertex l
    cell_face_signs: np.ndarray  # (nT, 4) +1 if outward normal == n_F
    face_cells: np.ndarray  # (nF, 2), second entry -1 on the boundary
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def n_faces(self) -> int:
        return len(self.faces)

    @property
    def n_cells(self) -> int:
        return len(self.cells)

    @property
    def canonical_cells(self) -> np.ndarray:
        """Cell vertex ids sorted ascending (the canonical local order)."""
        return np.sort(self.cells, axis=1)

    @property
    def cell_edge_signs(self) -> np.ndarray:
        """Local-vs-global edge orientation; identically +1 in canonical order."""
        return np.ones((self.n_cells, 6), dtype=int)

    def euler_characteristic(self) -> int:
        return self.n_vertices - self.n_edges + self.n_faces - self.n_cells

    def counts(self) -> dict[str, int]:
        return {"V": self.n_vertices, "E": self.n_edges, "F": self.n_faces, "T": self.n_cells}

    @property
    def h(self) -> float:
        """Largest edge length."""
        d = self.vertices[self.edges[:, 1]] - self.vertices[self.edges[:, 0]]
        return float(np.sqrt((d * d).sum(axis=1)).max())

    def geometry(self) -> "CellGeometry":
        """Geometry of all cells (cached)."""
        if "geometry" not in self._cache:
            self._cache["geometry"] = geometry_from_vertices(
                self.vertices[self.canonical_cells], face_signs=self.cell_face_signs
            )
        return self._cache["geometry"]


def _signed_volumes(x: np.ndarray) -> np.ndarray:
    d = x[:, 1:] - x[:, :1]
    return np.linalg.det(d) / 6.0


def mesh_from_cells(vertices: np.ndarray, cells: np.ndarray) -> Mesh:
    """Build the entity tables of a tetrahedral mesh from its cell list."""
    vertices = np.asarray(vertices, dtype=float)
    cells = np.asarray(cells, dtype=np.int64).copy()
    vol = _signed_volumes(vertices[cells])
    if np.any(np.abs(vol) <= 1e-14 * np.abs(vol).max()):
        bad = int(np.argmin(np.abs(vol)))
        raise ValueError(f"degenerate cell {bad}")
    neg = vol < 0
    cells[neg, 2], cells[neg, 3] = cells[neg, 3].copy(), cells[neg, 2].copy()

    canon = np.sort(cells, axis=1)
    nT = len(cells)
    loc_e = canon[:, LOCAL_EDGES].reshape(-1, 2)
    edges, cell_edges = np.unique(loc_e, axis=0, return_inverse=True)
    loc_f = canon[:, LOCAL_FACES].reshape(-1, 3)
    faces, cell_faces = np.unique(loc_f, axis=0, return_inverse=True)
    cell_edges = cell_edges.reshape(nT, 6)
    cell_faces = cell_faces.reshape(nT, 4)

    face_cells = -np.ones((len(faces), 2), dtype=np.int64)
    order = np.argsort(cell_faces.ravel(), kind="stable")
    fids = cell_faces.ravel()[order]
    owners = order // 4
    first = np.ones(len(fids), dtype=bool)
    first[1:] = fids[1:] != fids[:-1]
    face_cells[fids[first], 0] = owners[first]
    face_cells[fids[~first], 1] = owners[~first]
    counts = np.bincount(fids, minlength=len(faces))
    if counts.max() > 2:
        raise ValueError("non-manifold mesh: a face is shared by more than two cells")

    xf = vertices[faces]
    nF = np.cross(xf[:, 1] - xf[:, 0], xf[:, 2] - xf[:, 0])
    xc = vertices[canon]
    # outward iff n_F points away from the opposite vertex
    away = xf[cell_faces][:, :, 0, :] - xc
    signs = np.sign(np.einsum("tld,tld->tl", nF[cell_faces], away)).astype(int)
    return Mesh(
        vertices=vertices,
        cells=cells,
        edges=edges,
        faces=faces,
        cell_edges=cell_edges,
        cell_faces=cell_faces,
        cell_face_signs=signs,
        face_cells=face_cells,
    )


def build_uniform_cube_mesh(n: int) -> Mesh:
    """Kuhn triangulation of (0,1)^3 with ``n`` cubes per axis, 6 tets per cube.

    Every tetrahedron follows a monotone lattice path from the cube's lowest
    corner to its highest, so all cubes share the (0,0,0)-(1,1,1) diagonal
    direction and the face diagonals match across neighbouring cubes.
    """
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise ValueError(f"n must be a positive integer, got {n!r}")
    m = n + 1
    g = np.arange(m) / n
    Z, Y, X = np.meshgrid(g, g, g, indexing="ij")
    vertices = np.column_stack([X.ravel(), Y.ravel(), Z.ravel()])

    def vid(i, j, k):
        return i + m * (j + m * k)

    I, J, K = np.meshgrid(np.arange(n), np.arange(n), np.arange(n), indexing="ij")
    corners = np.stack([K.ravel(), J.ravel(), I.ravel()], axis=1)  # (i, j, k) per cube
    unit = np.eye(3, dtype=int)
    cells = []
    for perm in itertools.permutations(range(3)):
        path = [np.zeros(3, dtype=int)]
        for a in perm:
            path.append(path[-1] + unit[a])
        cells.append(np.stack([vid(*(corners + p).T) for p in path], axis=1))
    cells = np.stack(cells, axis=1).reshape(-1, 4)
    return mesh_from_cells(vertices, cells)


@dataclass(frozen=True)
class BoundaryInfo:
    vertices: np.ndarray  # bool (nV,)
    edges: np.ndarray  # bool (nE,)
    faces: np.ndarray  # bool (nF,)


def classify_boundary(mesh: Mesh) -> BoundaryInfo:
    faces = mesh.face_cells[:, 1] < 0
    bverts = np.zeros(mesh.n_vertices, dtype=bool)
    bverts[mesh.faces[faces].ravel()] = True
    # a boundary face's three edges are boundary edges
    fe = np.zeros(mesh.n_edges, dtype=bool)
    bf_cells = mesh.face_cells[faces, 0]
    bf_ids = np.flatnonzero(faces)
    for l in range(4):
        hit = mesh.cell_faces[bf_cells, l] == bf_ids
        fe[mesh.cell_edges[bf_cells[hit]][:, LOCAL_FACE_EDGES[l]].ravel()] = True
    return BoundaryInfo(vertices=bverts, edges=fe, faces=faces)


@dataclass(frozen=True)
class CellGeometry:
    """Affine geometry of a batch of cells in canonical local vertex order.

    Leading axis of every array is the cell axis.
    """

    vertices: np.ndarray  # (nc, 4, 3)
    grads: np.ndarray  # (nc, 4, 3) gradients of barycentric coordinates
    volume: np.ndarray  # (nc,)
    barycenter: np.ndarray  # (nc, 3)
    face_normals: np.ndarray  # (nc, 4, 3) unit outward normal of face l
    face_areas: np.ndarray  # (nc, 4)
    edge_tangents: np.ndarray  # (nc, 6, 3) unit tangents x_j - x_i
    edge_lengths: np.ndarray  # (nc, 6)
    face_signs: np.ndarray  # (nc, 4) outward normal = sign * n_F
    edge_signs: np.ndarray  # (nc, 6) local tangent = sign * t_e

    def __len__(self) -> int:
        return len(self.volume)

    def take(self, idx) -> "CellGeometry":
        idx = np.atleast_1d(idx)
        return CellGeometry(**{k: getattr(self, k)[idx] for k in self.__dataclass_fields__})

    def to_physical(self, bary: np.ndarray) -> np.ndarray:
        """Map barycentric points (nq, 4) to physical points (nc, nq, 3)."""
        return np.einsum("qi,cid->cqd", bary, self.vertices)

    @property
    def diameter(self) -> np.ndarray:
        return self.edge_lengths.max(axis=1)

    def global_face_normals(self) -> np.ndarray:
        return self.face_normals * self.face_signs[..., None]


def geometry_from_vertices(vertices: np.ndarray, face_signs: np.ndarray | None = None) -> CellGeometry:
    """Geometry of tetrahedra given as (nc, 4, 3) vertex arrays.

    The vertex order is taken as the canonical local order.  When
    ``face_signs`` is omitted, the global face normal is the right-hand-rule
    normal of the face's vertices in the given order, which coincides with
    the mesh convention whenever the order agrees with global ids.
    """
    x = np.asarray(vertices, dtype=float)
    if x.ndim == 2:
        x = x[None]
    J = np.transpose(x[:, 1:] - x[:, :1], (0, 2, 1))  # columns x_i - x_0
    det = np.linalg.det(J)
    scale = np.abs(x - x.mean(axis=1, keepdims=True)).max(axis=(1, 2)) ** 3
    bad = np.abs(det) <= 1e-12 * np.maximum(scale, 1e-300)
    if np.any(bad):
        raise ValueError(f"degenerate (zero-volume) cell {int(np.flatnonzero(bad)[0])}")
    Jinv = np.linalg.inv(J)
    g = np.empty_like(x)
    g[:, 1:] = Jinv
    g[:, 0] = -Jinv.sum(axis=1)
    volume = np.abs(det) / 6.0
    bc = x.mean(axis=1)

    xf = x[:, LOCAL_FACES]  # (nc, 4, 3, 3)
    nrm = np.cross(xf[:, :, 1] - xf[:, :, 0], xf[:, :, 2] - xf[:, :, 0])
    area2 = np.linalg.norm(nrm, axis=2)
    n_rhr = nrm / area2[..., None]
    # outward normal of face l is -grad(lambda_l)/|grad(lambda_l)|
    n_out = -g / np.linalg.norm(g, axis=2, keepdims=True)
    if face_signs is None:
        face_signs = np.sign(np.einsum("cld,cld->cl", n_out, n_rhr)).astype(int)

    te = x[:, LOCAL_EDGES[:, 1]] - x[:, LOCAL_EDGES[:, 0]]
    le = np.linalg.norm(te, axis=2)
    return CellGeometry(
        vertices=x,
        grads=g,
        volume=volume,
        barycenter=bc,
        face_normals=n_out,
        face_areas=area2 / 2.0,
        edge_tangents=te / le[..., None],
        edge_lengths=le,
        face_signs=np.asarray(face_signs, dtype=int),
        edge_signs=np.ones(le.shape, dtype=int),
    )


def cell_geometry(mesh: Mesh, cell: int) -> CellGeometry:
    """Geometry of a single mesh cell (a batch of one)."""
    if not 0 <= cell < mesh.n_cells:
        raise IndexError(f"cell {cell} out of range")
    return mesh.geometry().take(cell)
