"""Assembly of global bilinear forms and load vectors.

Every local matrix is computed for all cells at once from the polynomial
coefficients of the (sign-corrected) global basis and scattered into a
sparse matrix; removed boundary DOFs are skipped.
"""
from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from . import poly
from .quadrature import tet_rule
from .spaces import FeSpace

FORMS = ("gradcurl", "curlcurl", "mass", "grad_coupling", "vec_laplace", "div_pressure",
         "curl_coupling")


def _scatter(local: np.ndarray, test: FeSpace, trial: FeSpace) -> sp.csr_matrix:
    rows = np.broadcast_to(test.cell_dofs[:, :, None], local.shape)
    cols = np.broadcast_to(trial.cell_dofs[:, None, :], local.shape)
    m = (rows >= 0) & (cols >= 0)
    M = sp.coo_matrix((local[m], (rows[m], cols[m])), shape=(test.n_coeffs, trial.n_coeffs))
    return M.tocsr()


def _values(space: FeSpace, what: str, bary: np.ndarray) -> np.ndarray:
    """(nT, nq, nb[, 3]) values of the global basis (or a derivative)."""
    c = space.global_coeffs()
    if what == "curl":
        c = poly.curl(c)
    elif what == "grad":
        c = poly.gradient(c)
    elif what == "div":
        c = poly.divergence(c)
    geom = space.mesh.geometry()
    y = geom.to_physical(bary) - geom.barycenter[:, None, :]
    return poly.evaluate(c, y)


def _quad_form(test: FeSpace, tw: str, trial: FeSpace, uw: str, degree: int) -> np.ndarray:
    rule = tet_rule(degree)
    a = _values(test, tw, rule.points)
    b = _values(trial, uw, rule.points)
    a = a.reshape(a.shape[:3] + (-1,))
    b = b.reshape(b.shape[:3] + (-1,))
    vol = test.mesh.geometry().volume
    return np.einsum("cqad,cqbd,q,c->cab", a, b, rule.scaled_weights(), vol)


def _constant_tensor(space: FeSpace, what: str) -> np.ndarray:
    """Per-cell constant derivative tables (nT, nb, 9) for affine quantities."""
    c = space.global_coeffs()
    if what == "grad_curl":
        J = poly.jacobian_of_linear(poly.curl(c))  # (nT, nb, 3, 3)
    elif what == "grad":  # gradient of vector affine fields (CR)
        J = poly.jacobian_of_linear(c)
    else:
        raise ValueError(what)
    return J.reshape(J.shape[:2] + (9,))


def assemble(form: str, trial: FeSpace, test: FeSpace | None = None, degree: int | None = None) -> sp.csr_matrix:
    """Assemble ``form`` with rows indexed by ``test`` and columns by ``trial``.

    Forms
    -----
    gradcurl       (grad_h curl_h u, grad_h curl_h v) on W spaces
    curlcurl       (curl_h u, curl_h v) on W spaces
    mass           (u, v), scalar or vector
    grad_coupling  (u, grad mu): trial W, test Lagrange
    vec_laplace    (grad_h phi, grad_h psi) on the CR space
    div_pressure   (div_h psi, q): trial CR, test P0
    curl_coupling  (curl_h u, psi): trial W, test CR
    """
    test = trial if test is None else test
    if trial.mesh is not test.mesh:
        raise ValueError("spaces live on different meshes")
    vol = trial.mesh.geometry().volume
    fam_u, fam_v = trial.family, test.family
    w_fams = ("W0", "W1")
    if form == "gradcurl":
        _require(fam_u in w_fams and fam_v in w_fams, form, trial, test)
        a = _constant_tensor(test, "grad_curl")
        b = _constant_tensor(trial, "grad_curl")
        local = np.einsum("cad,cbd,c->cab", a, b, vol)
    elif form == "curlcurl":
        _require(fam_u in w_fams and fam_v in w_fams, form, trial, test)
        local = _quad_form(test, "curl", trial, "curl", degree or 2)
    elif form == "mass":
        _require(trial.is_vector == test.is_vector, form, trial, test)
        local = _quad_form(test, "value", trial, "value", degree or 4)
    elif form == "grad_coupling":
        _require(fam_u in w_fams + ("Nedelec0", "Nedelec1") and fam_v.startswith("Lagrange"), form, trial, test)
        local = _quad_form(test, "grad", trial, "value", degree or 3)
    elif form == "vec_laplace":
        _require(fam_u == fam_v == "CrouzeixRaviartP1", form, trial, test)
        a = _constant_tensor(test, "grad")
        b = _constant_tensor(trial, "grad")
        local = np.einsum("cad,cbd,c->cab", a, b, vol)
    elif form == "div_pressure":
        _require(fam_u == "CrouzeixRaviartP1" and fam_v == "P0", form, trial, test)
        local = _quad_form(test, "value", trial, "div", degree or 1)
    elif form == "curl_coupling":
        _require(fam_u in w_fams and fam_v == "CrouzeixRaviartP1", form, trial, test)
        local = _quad_form(test, "value", trial, "curl", degree or 2)
    else:
        raise ValueError(f"unknown form {form!r}; expected one of {FORMS}")
    return _scatter(local, test, trial)


def _require(ok: bool, form: str, trial: FeSpace, test: FeSpace) -> None:
    if not ok:
        raise ValueError(f"form {form!r} is not defined for trial {trial.family} / test {test.family}")


def diag_mass(space: FeSpace) -> np.ndarray:
    """Diagonal of the mass matrix: the squared L2 norms of the basis functions."""
    rule = tet_rule(4)
    v = _values(space, "value", rule.points)
    if v.ndim == 4:
        v2 = (v * v).sum(axis=-1)
    else:
        v2 = v * v
    loc = np.einsum("cqb,q,c->cb", v2, rule.scaled_weights(), space.mesh.geometry().volume)
    out = np.zeros(space.n_coeffs)
    m = space.cell_dofs >= 0
    np.add.at(out, space.cell_dofs[m], loc[m])
    return out


def assemble_load(space: FeSpace, f, degree: int = 6, chunk_points: int = 400_000) -> np.ndarray:
    """Load vector (f, phi_i) by cellwise quadrature of the given degree.

    Cells are processed in chunks so high-degree rules stay within memory.
    """
    rule = tet_rule(degree)
    geom = space.mesh.geometry()
    coeffs = space.global_coeffs()
    w = rule.scaled_weights()
    nT = space.mesh.n_cells
    step = max(1, chunk_points // rule.npoints)
    local = np.empty((nT, space.n_local))
    for s in range(0, nT, step):
        idx = slice(s, min(nT, s + step))
        g = geom.take(np.arange(nT)[idx])
        x = g.to_physical(rule.points)
        fx = np.asarray(f.value(x), dtype=float)
        phi = poly.evaluate(coeffs[idx], x - g.barycenter[:, None, :])
        if phi.ndim == 4:
            local[idx] = np.einsum("cqbd,cqd,q,c->cb", phi, fx, w, g.volume)
        else:
            local[idx] = np.einsum("cqb,cq,q,c->cb", phi, fx, w, g.volume)
    out = np.zeros(space.n_coeffs)
    m = space.cell_dofs >= 0
    np.add.at(out, space.cell_dofs[m], local[m])
    return out
