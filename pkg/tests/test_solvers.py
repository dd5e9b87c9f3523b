import numpy as np
import pytest
import scipy.linalg as sl
import scipy.sparse as sp

from ncstokes.assembly import assemble, diag_mass
from ncstokes.complex import complex_operator
from ncstokes.solvers import (
    SaddleSystem, SolverConfig, SolverError, schur_operator, schur_pcg_solve, solve_saddle, solve_stokes,
)
from ncstokes.spaces import build_space


def maxwell_blocks(mesh, k=0, form="gradcurl"):
    W = build_space(mesh, f"W{k}", "hom")
    G = build_space(mesh, "LagrangeP1" if k == 0 else "LagrangeP2", "hom")
    return W, G, assemble(form, W), assemble("grad_coupling", W, G), diag_mass(G)


@pytest.fixture(scope="module")
def mesh3():
    from ncstokes.mesh import build_uniform_cube_mesh

    return build_uniform_cube_mesh(3)


def test_config_validation():
    with pytest.raises(ValueError):
        SolverConfig("lu")
    with pytest.raises(ValueError):
        SolverConfig(tol=0.0)


def test_nonpositive_D_rejected():
    A = sp.eye(3)
    B = sp.csr_matrix(np.ones((1, 3)))
    with pytest.raises(ValueError):
        SaddleSystem(A, B, np.ones(3), D=np.array([0.0]))
    with pytest.raises(ValueError):
        schur_operator(A, B, np.array([-1.0]))


@pytest.mark.parametrize("method", ["direct", "minres"])
def test_saddle_residual_within_tolerance(method, rng, mesh3):
    _, _, A, B, D = maxwell_blocks(mesh3)
    f = rng.standard_normal(A.shape[0])
    s = SaddleSystem(A, B, f, M=D)
    cfg = SolverConfig(method, tol=1e-10)
    x, y, info = solve_saddle(s, cfg)
    assert info.residual <= 1e-9  # relative to the rhs


def test_saddle_against_dense_factorisation(rng, mesh1):
    _, _, A, B, D = maxwell_blocks(mesh1, k=1)
    f = rng.standard_normal(A.shape[0])
    s = SaddleSystem(A, B, f)
    x, y, _ = solve_saddle(s)
    ref = sl.solve(s.matrix().toarray(), s.rhs())
    assert np.abs(np.concatenate([x, y]) - ref).max() < 1e-8 * np.abs(ref).max()


def test_schur_matches_modified_saddle(rng, mesh3):
    _, _, A, B, D = maxwell_blocks(mesh3)
    f = rng.standard_normal(A.shape[0])
    s = SaddleSystem(A, B, f, D=D)
    xd, yd, _ = solve_saddle(s, SolverConfig("direct"))
    xs, ys, _ = solve_saddle(s, SolverConfig("schur_pcg", tol=1e-13))
    assert np.abs(xs - xd).max() < 1e-8 * np.abs(xd).max()
    assert np.abs(ys - yd).max() < 1e-8 * max(np.abs(yd).max(), 1e-300)


def test_modified_system_equals_original_for_gradient_free_load(rng, mesh3):
    """When the load annihilates gradients, lambda = 0 and both systems agree."""
    W, G, A, B, D = maxwell_blocks(mesh3)
    Dg = complex_operator(G, W).toarray()
    f = rng.standard_normal(A.shape[0])
    # remove the part of f seen by gradients: f - Dg (Dg^T Dg)^-1 Dg^T f
    f -= Dg @ np.linalg.solve(Dg.T @ Dg, Dg.T @ f)
    x0, y0, _ = solve_saddle(SaddleSystem(A, B, f))
    x1, y1, _ = solve_saddle(SaddleSystem(A, B, f, D=D), SolverConfig("schur_pcg", tol=1e-13))
    assert np.abs(y0).max() < 1e-9 * np.abs(x0).max()
    assert np.abs(x1 - x0).max() < 1e-8 * np.abs(x0).max()


def test_schur_with_zero_coupling_reduces_to_cg(rng):
    n = 40
    R = rng.standard_normal((n, n))
    A = sp.csr_matrix(R @ R.T + n * np.eye(n))
    B = sp.csr_matrix((2, n))
    f = rng.standard_normal(n)
    x, info = schur_pcg_solve(A, B, np.ones(2), f, SolverConfig("schur_pcg", tol=1e-12, preconditioner="jacobi"))
    assert np.allclose(x, np.linalg.solve(A.toarray(), f), rtol=1e-9, atol=1e-12)
    assert info.iterations > 0


def test_schur_operator_positive_definite(rng, mesh3):
    _, _, A, B, D = maxwell_blocks(mesh3)
    S = schur_operator(A, B, D)
    for _ in range(20):
        v = rng.standard_normal(S.shape[0])
        assert v @ (S @ v) > 0


def test_cg_iteration_limit_raises(rng, mesh3):
    _, _, A, B, D = maxwell_blocks(mesh3)
    f = rng.standard_normal(A.shape[0])
    with pytest.raises(SolverError):
        schur_pcg_solve(A, B, D, f, SolverConfig("schur_pcg", tol=1e-14, maxiter=2, preconditioner="jacobi"))


def test_direct_singular_system_reports_failure():
    A = sp.csr_matrix(np.zeros((2, 2)))
    B = sp.csr_matrix(np.zeros((1, 2)))
    with pytest.raises(SolverError):
        solve_saddle(SaddleSystem(A, B, np.ones(2)))


@pytest.mark.parametrize("method", ["direct", "minres"])
def test_stokes_zero_mean_pressure(method, rng, mesh3):
    S = build_space(mesh3, "cr", "hom")
    Q = build_space(mesh3, "p0", "hom")
    L = assemble("vec_laplace", S)
    Bd = assemble("div_pressure", S, Q)
    vol = mesh3.geometry().volume
    rhs = rng.standard_normal(S.n_coeffs)
    phi, p, _ = solve_stokes(L, Bd, rhs, SolverConfig(method, tol=1e-12), volumes=vol)
    assert abs(p @ vol) < 1e-12
    assert np.abs(Bd @ phi).max() < 1e-9
    r = L @ phi + Bd.T @ p - rhs
    assert np.linalg.norm(r) < 1e-8 * np.linalg.norm(rhs)


@pytest.mark.parametrize("mesh_name", ["mesh1", "mesh2"])
def test_discrete_poincare_inequality(mesh_name, request):
    """curl-curl is positive definite on the discretely divergence-free subspace."""
    mesh = request.getfixturevalue(mesh_name)
    W, G, C, B, D = maxwell_blocks(mesh, form="curlcurl")
    M = assemble("mass", W).toarray()
    Bd = B.toarray()
    Z = sl.null_space(Bd) if Bd.shape[0] else np.eye(W.dim)
    ev = sl.eigh(Z.T @ C.toarray() @ Z, Z.T @ M @ Z, eigvals_only=True)
    assert ev.min() > 1e-3
