import numpy as np
import pytest

from ncstokes.complex import (
    complex_operator, complex_spaces, edge_face_spaces, numerical_rank, third_row_residual,
    verify_commuting, verify_exactness,
)
from ncstokes.fields import divergence_free_poly_field, random_poly_field
from ncstokes.spaces import build_space, interpolate


@pytest.mark.parametrize("n", [1, 2])
@pytest.mark.parametrize("k", [0, 1])
@pytest.mark.parametrize("bc", ["none", "hom"])
def test_exactness(n, k, bc, mesh1, mesh2):
    m = mesh1 if n == 1 else mesh2
    rep = verify_exactness(m, k, bc, n=n)
    assert rep.passed, rep.to_text()
    assert rep.residuals["curl_grad"] < 1e-12 and rep.residuals["div_curl"] < 1e-12


def test_curl_rank_counts(mesh1, mesh2):
    # [DERIVED] E + 2F - V + 1 = 3F - T: 48 at n = 1 and 312 at n = 2
    for m, expected in ((mesh1, 48), (mesh2, 312)):
        rep = verify_exactness(m, 0, "none")
        V, E, F, T = m.n_vertices, m.n_edges, m.n_faces, m.n_cells
        assert rep.ranks["curl"] == E + 2 * F - V + 1 == 3 * F - T == expected
    assert verify_exactness(mesh1, 0, "hom").ranks["curl"] == 13


def test_report_text(mesh1):
    text = verify_exactness(mesh1, 0, "hom", n=1).to_text()
    lines = dict(l.split("=", 1) for l in text.splitlines())
    assert lines["status"] == "pass" and lines["rank.curl"] == "13" and lines["bc"] == "hom"


def test_illegal_pair(mesh1):
    with pytest.raises(ValueError):
        complex_operator(build_space(mesh1, "P0"), build_space(mesh1, "W0"))
    with pytest.raises(ValueError):
        complex_operator(build_space(mesh1, "W0"), build_space(mesh1, "P0"))


def test_gradient_of_hat_function(mesh2):
    G, W = build_space(mesh2, "LagrangeP1"), build_space(mesh2, "W0")
    Dg = complex_operator(G, W).toarray()
    j = 13  # the centre vertex
    col = Dg[:, j]
    # edge DOFs: d_t phi integrated along e = phi(high) - phi(low)
    for e, (a, b) in enumerate(mesh2.edges):
        assert col[e] == pytest.approx(float(b == j) - float(a == j))
    assert np.all(col[mesh2.n_edges:] == 0)


def test_rank_helper():
    assert numerical_rank(np.diag([1.0, 1e-14, 2.0])) == 2
    assert numerical_rank(np.zeros((0, 3))) == 0


@pytest.mark.parametrize("k", [0, 1])
def test_commuting_random_polynomials(k, rng, mesh2):
    for _ in range(3):
        res = verify_commuting(mesh2, k, random_poly_field(rng, 2), random_poly_field(rng, 2, 1))
        assert max(res.values()) < 1e-10, res


def test_commuting_divergence_free_affine(rng, mesh1):
    v = divergence_free_poly_field(rng, 1)
    assert abs(v.div(rng.random((5, 3)))).max() < 1e-13
    S, Q = build_space(mesh1, "cr"), build_space(mesh1, "p0")
    assert np.abs(complex_operator(S, Q) @ interpolate(S, v).coeffs).max() < 1e-13


@pytest.mark.parametrize("k", [0, 1])
def test_third_row(k, rng, mesh2):
    _, W, _, _ = complex_spaces(mesh2, k, "hom")
    assert third_row_residual(mesh2, k, rng.standard_normal((W.dim, 4))) < 1e-11


def test_edge_face_row_exact(mesh2):
    G, N, R = edge_face_spaces(mesh2, 0)
    assert abs(complex_operator(N, R) @ complex_operator(G, N)).max() < 1e-12


def test_commuting_with_nonpolynomial_field(mesh2):
    """Commuting is structural: it holds for any smooth field given exact quadrature limits."""
    class Smooth:
        def value(self, x):
            return np.stack([np.sin(x[..., 1]), x[..., 0] * x[..., 2], np.cos(x[..., 0])], -1)

        def curl(self, x):
            return np.stack([-x[..., 0], np.sin(x[..., 0]), x[..., 2] - np.cos(x[..., 1])], -1)

    class CurlField:
        def value(self, x):
            return Smooth().curl(x)

    _, W, S, _ = complex_spaces(mesh2, 0)
    lhs = complex_operator(W, S) @ interpolate(W, Smooth(), degree=14).coeffs
    rhs = interpolate(S, CurlField(), degree=14).coeffs
    assert np.abs(lhs - rhs).max() < 1e-10
