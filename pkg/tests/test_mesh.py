import numpy as np
import pytest

from ncstokes.mesh import (
    build_uniform_cube_mesh, cell_geometry, classify_boundary, geometry_from_vertices, mesh_from_cells,
)

from conftest import REFERENCE_TET


@pytest.mark.parametrize("n,counts", [(1, (8, 19, 18, 6)), (2, (27, 98, 120, 48))])
def test_entity_counts(n, counts):
    c = build_uniform_cube_mesh(n).counts()
    assert (c["V"], c["E"], c["F"], c["T"]) == counts


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_euler_faces_and_volumes(n):
    m = build_uniform_cube_mesh(n)
    assert m.euler_characteristic() == 1
    interior = m.face_cells[:, 1] >= 0
    assert np.all(m.face_cells[:, 0] >= 0)
    vol = m.geometry().volume
    assert np.allclose(vol, 1.0 / (6 * n**3))
    # positive orientation of the stored cells
    x = m.vertices[m.cells]
    assert np.all(np.linalg.det(x[:, 1:] - x[:, :1]) > 0)
    assert interior.sum() == m.n_faces - 12 * n * n


def test_boundary_counts_n1(mesh1):
    b = classify_boundary(mesh1)
    assert b.edges.sum() == 18 and (~b.edges).sum() == 1
    assert b.faces.sum() == 12 and (~b.faces).sum() == 6
    (diag,) = np.flatnonzero(~b.edges)
    assert set(mesh1.edges[diag]) == {0, 7}
    assert np.all(mesh1.face_cells[b.faces, 1] == -1)


def test_boundary_masks_match_coordinates(mesh2):
    b = classify_boundary(mesh2)
    on = np.any((mesh2.vertices == 0) | (mesh2.vertices == 1), axis=1)
    assert np.array_equal(b.vertices, on)
    assert np.array_equal(b.edges, on[mesh2.edges].all(axis=1) & _coplanar_on_boundary(mesh2, mesh2.edges))


def _coplanar_on_boundary(m, ent):
    x = m.vertices[ent]
    return np.any(np.all((x == 0) | (x == 1), axis=1) & np.all(x == x[:, :1], axis=1), axis=1)


def test_orientation_coherence_on_interior_faces(mesh2):
    g = mesh2.geometry()
    nF = g.global_face_normals()
    for f in np.flatnonzero(mesh2.face_cells[:, 1] >= 0):
        c0, c1 = mesh2.face_cells[f]
        l0 = int(np.flatnonzero(mesh2.cell_faces[c0] == f)[0])
        l1 = int(np.flatnonzero(mesh2.cell_faces[c1] == f)[0])
        assert np.allclose(g.face_normals[c0, l0], -g.face_normals[c1, l1])
        assert np.allclose(nF[c0, l0], nF[c1, l1])


def test_global_normal_is_right_hand_rule_of_ascending_vertices(mesh2):
    g = mesh2.geometry()
    x = mesh2.vertices[mesh2.faces]
    n = np.cross(x[:, 1] - x[:, 0], x[:, 2] - x[:, 0])
    n /= np.linalg.norm(n, axis=1, keepdims=True)
    nF = g.global_face_normals()
    for l in range(4):
        assert np.allclose(nF[:, l], n[mesh2.cell_faces[:, l]])


def test_deterministic_tables():
    a, b = build_uniform_cube_mesh(3), build_uniform_cube_mesh(3)
    for name in ("vertices", "cells", "edges", "faces", "cell_edges", "cell_faces", "cell_face_signs"):
        assert np.array_equal(getattr(a, name), getattr(b, name))


def test_edges_and_faces_sorted_lexicographically(mesh2):
    assert np.all(mesh2.edges[:, 0] < mesh2.edges[:, 1])
    assert np.all(np.diff(mesh2.faces, axis=1) > 0)
    keys = [tuple(e) for e in mesh2.edges]
    assert keys == sorted(keys)
    keys = [tuple(f) for f in mesh2.faces]
    assert keys == sorted(keys)


def test_rejects_zero_subdivisions():
    with pytest.raises(ValueError):
        build_uniform_cube_mesh(0)


def test_reference_tet_geometry():
    g = geometry_from_vertices(REFERENCE_TET)
    assert g.volume[0] == pytest.approx(1.0 / 6.0)
    assert np.allclose(g.barycenter[0], 0.25)
    assert np.allclose(g.grads[0, 0], [-1.0, -1.0, -1.0])
    assert np.allclose(g.grads[0].sum(axis=0), 0.0)


def test_barycentric_gradients_are_dual(mesh2):
    g = mesh2.geometry()
    # lambda_i(x_j) - lambda_i(x_0) = grad_i . (x_j - x_0)
    d = g.vertices - g.vertices[:, :1]
    lam = np.einsum("cid,cjd->cij", g.grads, d)
    expected = np.eye(4)[None] - np.eye(4)[None, :, :1]
    assert np.allclose(lam, expected)
    assert np.allclose(g.grads.sum(axis=1), 0.0, atol=1e-12)


def test_face_tangent_identity(ref_geom):
    # t_{F,e} = n_F x n_{F,e} is a unit tangent of the edge inside F
    from ncstokes.mesh import LOCAL_EDGES, LOCAL_FACE_EDGES

    g = ref_geom
    for l in range(4):
        n = g.face_normals[0, l]
        for e in LOCAL_FACE_EDGES[l]:
            t = g.edge_tangents[0, e]
            nfe = np.cross(t, n)  # in-plane normal of the edge
            assert abs(nfe @ n) < 1e-14
            assert np.allclose(np.abs(np.cross(n, nfe)), np.abs(t))
    assert LOCAL_EDGES.shape == (6, 2)


def test_degenerate_cell_is_an_error():
    flat = REFERENCE_TET.copy()
    flat[3] = [0.5, 0.5, 0.0]
    with pytest.raises(ValueError, match="degenerate"):
        geometry_from_vertices(flat)
    with pytest.raises(ValueError):
        mesh_from_cells(np.vstack([REFERENCE_TET[:3], flat[3:]]), np.array([[0, 1, 2, 3]]))


def test_cell_geometry_range(mesh1):
    assert len(cell_geometry(mesh1, 5)) == 1
    with pytest.raises(IndexError):
        cell_geometry(mesh1, 6)
