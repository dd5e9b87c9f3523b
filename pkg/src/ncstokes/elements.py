"""Local finite elements on tetrahedra.

Families
--------
``W0``, ``W1``
    H(grad curl)-nonconforming elements with shape space
    grad P_{k+1}(K) + (x - x_K) x P_1(K; R^3) (14 and 20 members).  DOFs are
    edge moments of the tangential component against P_k(e) followed by two
    tangential components of the face integral of (curl v) x n.
``LagrangeP1``, ``LagrangeP2``
    Nodal Lagrange elements (vertex values, edge-midpoint values).
``CrouzeixRaviartP1``
    Vector nonconforming P1 element, DOFs are face means of each component.
``P0``
    Cell means.
``Nedelec0``, ``Nedelec1``
    Edge elements P_k(K; R^3) + (x - x_K) x P_0(K; R^3) sharing the W edge DOFs.
``RT0``
    Lowest-order Raviart-Thomas, DOFs are face fluxes.

All local quantities use the canonical local vertex order of ``mesh.py``.
Face DOFs are taken with respect to the local outward normal; the global
basis is ``sign * local basis`` with the signs in ``CellGeometry``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import poly
from .mesh import LOCAL_EDGES, LOCAL_FACES, CellGeometry
from .quadrature import edge_rule, tet_rule, triangle_rule

W_FAMILIES = {0: "W0", 1: "W1"}
NEDELEC_FAMILIES = {0: "Nedelec0", 1: "Nedelec1"}
VECTOR_FAMILIES = {"W0", "W1", "CrouzeixRaviartP1", "Nedelec0", "Nedelec1", "RT0"}
FAMILIES = VECTOR_FAMILIES | {"LagrangeP1", "LagrangeP2", "P0"}

# orthogonal edge polynomials on s in [0, 1], s measured from the lower vertex
_EDGE_POLYS = (lambda s: np.ones_like(s), lambda s: 2.0 * s - 1.0)
_EDGE_POLY_SQNORM = (1.0, 1.0 / 3.0)


def family_dim(family: str) -> int:
    return {"W0": 14, "W1": 20, "LagrangeP1": 4, "LagrangeP2": 10, "CrouzeixRaviartP1": 12,
            "P0": 1, "Nedelec0": 6, "Nedelec1": 12, "RT0": 4}[family]


def w_family(k: int) -> str:
    if k not in W_FAMILIES:
        raise ValueError(f"k must be 0 or 1, got {k!r}")
    return W_FAMILIES[k]


# ---------------------------------------------------------------------------
# function sources: batches of functions evaluated at per-cell points
# ---------------------------------------------------------------------------

class PolySource:
    """A batch of cellwise P2 polynomials; coeffs (nc, F, [3,] 10)."""

    def __init__(self, geom: CellGeometry, coeffs: np.ndarray):
        self.geom = geom
        self.coeffs = coeffs

    def _y(self, x):
        return x - self.geom.barycenter[:, None, :]

    def value(self, x):
        return poly.evaluate(self.coeffs, self._y(x))

    def curl(self, x):
        return poly.evaluate(poly.curl(self.coeffs), self._y(x))

    def div(self, x):
        return poly.evaluate(poly.divergence(self.coeffs), self._y(x))

    def grad(self, x):
        return poly.evaluate(poly.gradient(self.coeffs), self._y(x))


class FieldSource:
    """A single analytic field seen as a batch of one function per cell."""

    def __init__(self, field):
        self.field = field

    def __getattr__(self, name):
        fn = getattr(self.field, name)
        return lambda x: fn(x)[:, :, None]


def _as_source(geom, obj):
    if isinstance(obj, (PolySource, FieldSource)):
        return obj
    if isinstance(obj, np.ndarray):
        return PolySource(geom, obj)
    return FieldSource(obj)


# ---------------------------------------------------------------------------
# DOF functionals
# ---------------------------------------------------------------------------

def _edge_points(geom: CellGeometry, degree: int):
    rule = edge_rule(degree)
    s = rule.points[:, 1]
    xi = geom.vertices[:, LOCAL_EDGES[:, 0]]
    xj = geom.vertices[:, LOCAL_EDGES[:, 1]]
    pts = xi[:, :, None, :] * (1.0 - s)[:, None] + xj[:, :, None, :] * s[:, None]
    return pts, s, rule.scaled_weights(), xj - xi  # (nc,6,nq,3), (nq,), (nq,), (nc,6,3)


def _face_points(geom: CellGeometry, degree: int):
    rule = triangle_rule(degree)
    xf = geom.vertices[:, LOCAL_FACES]  # (nc, 4, 3, 3)
    pts = np.einsum("qi,clid->clqd", rule.points, xf)
    return pts, rule.scaled_weights()


def _tangential(a, n):
    return a - np.sum(a * n, axis=-1, keepdims=True) * n


def face_dof_directions(geom: CellGeometry) -> np.ndarray:
    """Vectors a_{l,r} with M_{F_l,r}(v) = mean_F(curl v) . a_{l,r}.

    M_{F_l,1} pairs with the tangential part of grad(lambda_{l_2}),
    M_{F_l,2} with that of grad(lambda_{l_1}); the normalisation makes the
    pair dual to n_l x grad(lambda_{l_1}), n_l x grad(lambda_{l_2}).
    """
    n = geom.face_normals
    g1 = geom.grads[:, LOCAL_FACES[:, 0]]
    g2 = geom.grads[:, LOCAL_FACES[:, 1]]
    den = np.einsum("cld,cld->cl", np.cross(g1, g2), n)
    a1 = _tangential(g2, n) / (2.0 * den)[..., None]
    a2 = _tangential(g1, n) / (-2.0 * den)[..., None]
    return np.stack([a1, a2], axis=2)  # (nc, 4, 2, 3)


def _edge_moments(geom, src, k, degree):
    pts, s, w, t = _edge_points(geom, degree)
    nc = len(geom)
    vals = src.value(pts.reshape(nc, -1, 3)).reshape(nc, 6, len(s), -1, 3)
    vt = np.einsum("celfd,ced->celf", vals, t)
    out = [np.einsum("celf,l->cef", vt, w * _EDGE_POLYS[m](s)) for m in range(k + 1)]
    return np.stack(out, axis=2).reshape(nc, 6 * (k + 1), -1)  # edge-major


def _face_curl_means(geom, src, degree):
    pts, w = _face_points(geom, degree)
    nc = len(geom)
    c = src.curl(pts.reshape(nc, -1, 3)).reshape(nc, 4, len(w), -1, 3)
    return np.einsum("clqfd,q->clfd", c, w)


def local_dofs(family: str, geom: CellGeometry, source, degree: int | None = None) -> np.ndarray:
    """Apply the local DOF functionals of ``family`` to a batch of functions.

    ``source`` is an analytic field, a coefficient array of cellwise
    polynomials, or a ``PolySource``.  Returns (nc, ndofs, F) with F the
    number of functions in the batch (1 for a field).  ``degree`` sets the
    quadrature degree; the default is exact for P2 inputs.
    """
    src = _as_source(geom, source)
    nc = len(geom)
    if family in ("W0", "W1", "Nedelec0", "Nedelec1"):
        k = int(family[-1])
        edge = _edge_moments(geom, src, k, degree or k + 2)
        if family.startswith("Nedelec"):
            return edge
        cm = _face_curl_means(geom, src, degree or 3)
        face = np.einsum("clfd,clrd->clrf", cm, face_dof_directions(geom))
        return np.concatenate([edge, face.reshape(nc, 8, -1)], axis=1)
    if family == "LagrangeP1":
        return src.value(geom.vertices)
    if family == "LagrangeP2":
        mid = 0.5 * (geom.vertices[:, LOCAL_EDGES[:, 0]] + geom.vertices[:, LOCAL_EDGES[:, 1]])
        return src.value(np.concatenate([geom.vertices, mid], axis=1))
    if family == "CrouzeixRaviartP1":
        pts, w = _face_points(geom, degree or 2)
        v = src.value(pts.reshape(nc, -1, 3)).reshape(nc, 4, len(w), -1, 3)
        m = np.einsum("clqfd,q->cldf", v, w)
        return m.reshape(nc, 12, -1)
    if family == "P0":
        rule = tet_rule(degree or 2)
        v = src.value(geom.to_physical(rule.points))
        if v.ndim == 4:
            raise ValueError("P0 functionals expect a scalar source")
        return np.einsum("cqf,q->cf", v, rule.scaled_weights())[:, None, :]
    if family == "RT0":
        pts, w = _face_points(geom, degree or 2)
        v = src.value(pts.reshape(nc, -1, 3)).reshape(nc, 4, len(w), -1, 3)
        flux = np.einsum("clqfd,q,cld,cl->clf", v, w, geom.face_normals, geom.face_areas)
        return flux
    raise ValueError(f"unknown family {family!r}")


def local_dofs_w(k: int, geom: CellGeometry, field, degree: int = 8) -> np.ndarray:
    """W_k DOF values of an analytic field on each cell: (nc, 14|20)."""
    return local_dofs(w_family(k), geom, field, degree=degree)[..., 0]


def local_signs(family: str, geom: CellGeometry) -> np.ndarray:
    """Orientation factor relating local DOFs to global DOFs, (nc, ndofs)."""
    nc = len(geom)
    if family in ("W0", "W1"):
        k = int(family[-1])
        return np.concatenate(
            [np.repeat(geom.edge_signs, k + 1, axis=1), np.repeat(geom.face_signs, 2, axis=1)], axis=1
        )
    if family in ("Nedelec0", "Nedelec1"):
        return np.repeat(geom.edge_signs, int(family[-1]) + 1, axis=1)
    if family == "RT0":
        return geom.face_signs.copy()
    return np.ones((nc, family_dim(family)), dtype=int)


# ---------------------------------------------------------------------------
# local bases
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LocalBasis:
    family: str
    geom: CellGeometry
    coeffs: np.ndarray  # (nc, nb, 3, 10) for vector families, (nc, nb, 10) scalar

    @property
    def is_vector(self) -> bool:
        return self.coeffs.ndim == 4

    @property
    def size(self) -> int:
        return self.coeffs.shape[1]

    def _y(self, bary):
        return self.geom.to_physical(bary) - self.geom.barycenter[:, None, :]

    def values(self, bary):
        return poly.evaluate(self.coeffs, self._y(bary))

    def curls(self, bary):
        return poly.evaluate(poly.curl(self.coeffs), self._y(bary))

    def divs(self, bary):
        return poly.evaluate(poly.divergence(self.coeffs), self._y(bary))

    def grads(self, bary):
        return poly.evaluate(poly.gradient(self.coeffs), self._y(bary))

    def curl_coeffs(self):
        return poly.curl(self.coeffs)

    def grad_curl(self) -> np.ndarray:
        """Constant gradient of the (affine) curl: (nc, nb, 3, 3), [i, a] = d_a curl_i."""
        return poly.jacobian_of_linear(poly.curl(self.coeffs))

    def dof_matrix(self, degree: int | None = None) -> np.ndarray:
        """DOFs of every member: (nc, ndofs, nb); identity for a dual basis."""
        return local_dofs(self.family, self.geom, self.coeffs, degree=degree)


def _lambdas(geom):
    return poly.linear(np.full(geom.grads.shape[:2], 0.25), geom.grads)  # (nc, 4, 10)


def w0_basis(geom: CellGeometry) -> LocalBasis:
    """Closed-form dual basis of W_0(K): 12 face members then 6... ordered as the DOFs.

    Member order follows the DOF order: one function per edge e_ij, then
    phi_{F_l,1}, phi_{F_l,2} for l = 1..4.
    """
    nc = len(geom)
    g = geom.grads
    n = geom.face_normals
    xK = geom.barycenter
    lam = _lambdas(geom)
    face = np.zeros((nc, 4, 2, 3, poly.NMONO))
    for l in range(4):
        nl = n[:, l]
        lin = 8.0 * lam[:, l] - 3.0 * poly.linear(np.ones(nc), np.zeros((nc, 3)))
        hgt = np.einsum("cd,cd->c", geom.vertices[:, l] - xK, nl)
        for i in range(2):
            gli = g[:, LOCAL_FACES[l, i]]
            first = 0.25 * poly.smul(lin, poly.y_cross(np.cross(nl, gli)))
            const = poly.constant_vector(0.25 * hgt[:, None] * gli + nl / 16.0)
            face[:, l, i] = first + const
    # edge members: Whitney function corrected by face members
    a = face_dof_directions(geom)  # (nc, 4, 2, 3)
    edge = np.zeros((nc, 6, 3, poly.NMONO))
    for e, (i, j) in enumerate(LOCAL_EDGES):
        whitney = poly.smul(lam[:, i], poly.constant_vector(g[:, j])) - poly.smul(
            lam[:, j], poly.constant_vector(g[:, i])
        )
        # curl(whitney) = 2 grad(l_i) x grad(l_j) is constant, so M_{F,r} = curl . a_r
        cw = 2.0 * np.cross(g[:, i], g[:, j])
        c = -np.einsum("cd,clrd->clr", cw, a)
        edge[:, e] = whitney + np.einsum("clr,clrdm->cdm", c, face)
    coeffs = np.concatenate([edge, face.reshape(nc, 8, 3, poly.NMONO)], axis=1)
    return LocalBasis("W0", geom, coeffs)


def _unit_vectors(nc):
    return np.broadcast_to(np.eye(3), (nc, 3, 3))


def w_generators(k: int, geom: CellGeometry) -> np.ndarray:
    """Raw spanning set of W_k(K), scaled to O(1): (nc, 14|20, 3, 10)."""
    nc = len(geom)
    h = geom.diameter
    lam = _lambdas(geom)
    gens = [poly.constant_vector(h[:, None] * geom.grads[:, i]) for i in (1, 2, 3)]
    if k == 1:
        for i, j in LOCAL_EDGES:
            gens.append(h[:, None, None] * poly.gradient(poly.mul(lam[:, i], lam[:, j])))
    E = _unit_vectors(nc)
    for m in range(3):
        gens.append(poly.y_cross(E[:, m]) / h[:, None, None])
    for m in range(3):
        for j in range(3):
            if (m, j) == (2, 2):
                continue  # sum_m y_m (y x e_m) = 0
            yj = poly.linear(np.zeros(nc), E[:, j])
            gens.append(poly.smul(yj, poly.y_cross(E[:, m])) / (h * h)[:, None, None])
    return np.stack(gens, axis=1)


def nedelec_generators(k: int, geom: CellGeometry) -> np.ndarray:
    nc = len(geom)
    h = geom.diameter
    E = _unit_vectors(nc)
    gens = [poly.constant_vector(E[:, m]) for m in range(3)]
    if k == 0:
        gens += [poly.y_cross(E[:, m]) / h[:, None, None] for m in range(3)]
    else:
        for m in range(3):
            for j in range(3):
                yj = poly.linear(np.zeros(nc), E[:, j] / h[:, None])
                gens.append(poly.smul(yj, poly.constant_vector(E[:, m])))
    return np.stack(gens, axis=1)


def rt0_generators(geom: CellGeometry) -> np.ndarray:
    nc = len(geom)
    E = _unit_vectors(nc)
    gens = [poly.constant_vector(E[:, m]) for m in range(3)]
    ident = np.zeros((nc, 3, poly.NMONO))
    ident[:, [0, 1, 2], [1, 2, 3]] = 1.0 / geom.diameter[:, None]
    gens.append(ident)
    return np.stack(gens, axis=1)


def generators(family: str, geom: CellGeometry) -> np.ndarray:
    if family in ("W0", "W1"):
        return w_generators(int(family[-1]), geom)
    if family in ("Nedelec0", "Nedelec1"):
        return nedelec_generators(int(family[-1]), geom)
    if family == "RT0":
        return rt0_generators(geom)
    raise ValueError(f"no generator set for {family!r}")


def dual_basis(family: str, geom: CellGeometry) -> LocalBasis:
    """Basis dual to the family's DOFs, obtained by inverting the DOF matrix."""
    gens = generators(family, geom)
    D = local_dofs(family, geom, gens)  # (nc, ndof, ngen)
    cond = np.linalg.cond(D)
    bad = ~np.isfinite(cond) | (cond > 1e12)
    if np.any(bad):
        raise np.linalg.LinAlgError(
            f"singular {family} DOF matrix on cell {int(np.flatnonzero(bad)[0])}"
        )
    Dinv = np.linalg.inv(D)  # (nc, ngen, ndof)
    coeffs = np.einsum("cgdm,cgb->cbdm", gens, Dinv)
    return LocalBasis(family, geom, coeffs)


def w_basis(k: int, geom: CellGeometry) -> LocalBasis:
    """Basis of W_k(K) dual to its DOFs (closed form for k = 0)."""
    if w_family(k) == "W0":
        return w0_basis(geom)
    return dual_basis("W1", geom)


def aux_basis(family: str, geom: CellGeometry) -> LocalBasis:
    """Bases of the auxiliary families (Lagrange, CR, P0, Nedelec, RT0)."""
    nc = len(geom)
    lam = _lambdas(geom)
    if family == "LagrangeP1":
        return LocalBasis(family, geom, lam.copy())
    if family == "LagrangeP2":
        one = poly.linear(np.ones(nc), np.zeros((nc, 3)))
        vert = [poly.mul(lam[:, i], 2.0 * lam[:, i] - one) for i in range(4)]
        mid = [4.0 * poly.mul(lam[:, i], lam[:, j]) for i, j in LOCAL_EDGES]
        return LocalBasis(family, geom, np.stack(vert + mid, axis=1))
    if family == "P0":
        return LocalBasis(family, geom, poly.linear(np.ones((nc, 1)), np.zeros((nc, 1, 3))))
    if family == "CrouzeixRaviartP1":
        one = poly.linear(np.ones(nc), np.zeros((nc, 3)))
        coeffs = np.zeros((nc, 12, 3, poly.NMONO))
        for l in range(4):
            cr = one - 3.0 * lam[:, l]
            for c in range(3):
                coeffs[:, 3 * l + c, c] = cr
        return LocalBasis(family, geom, coeffs)
    if family in ("Nedelec0", "Nedelec1", "RT0"):
        return dual_basis(family, geom)
    if family in ("W0", "W1"):
        return w_basis(int(family[-1]), geom)
    raise ValueError(f"unknown family {family!r}")


def local_basis(family: str, geom: CellGeometry) -> LocalBasis:
    return aux_basis(family, geom)


# ---------------------------------------------------------------------------
# analysis helpers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class UnisolvenceReport:
    k: int
    dof_matrix: np.ndarray  # (nc, n, n) DOFs of raw generators
    abs_det: np.ndarray
    cond: np.ndarray
    dual_deviation: float  # max |DOF(dual basis) - I|

    @property
    def ok(self) -> bool:
        return bool(np.all(np.isfinite(self.cond)) and np.all(self.cond < 1e10) and self.dual_deviation < 1e-9)


def unisolvence_check(k: int, geom: CellGeometry) -> UnisolvenceReport:
    fam = w_family(k)
    D = local_dofs(fam, geom, w_generators(k, geom))
    basis = w_basis(k, geom)
    dev = np.abs(basis.dof_matrix() - np.eye(basis.size)).max()
    return UnisolvenceReport(k, D, np.abs(np.linalg.det(D)), np.linalg.cond(D), float(dev))


def poincare_operator(geom: CellGeometry, q: np.ndarray) -> np.ndarray:
    """Poincare operator on affine vector fields.

    ``q`` holds affine vector polynomials (..., 3, 10) in y = x - x_K, with
    q(y) = q0 + D y.  Returns -y x (q0 / 2 + D y / 3) as P2 coefficients.
    """
    q = np.asarray(q, dtype=float)
    if np.any(np.abs(q[..., 4:]) > 0):
        raise ValueError("Poincare operator expects affine input")
    w = q.copy()
    w[..., 0] *= 0.5
    w[..., 1:4] /= 3.0
    Y = np.zeros(q.shape)
    for a in range(3):
        Y[..., a, 1 + a] = 1.0
    return -cross(Y, w)


def cross(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Pointwise cross product of vector polynomials (degrees adding to <= 2)."""
    c = lambda i, j: poly.mul(u[..., i, :], v[..., j, :])  # noqa: E731
    return np.stack([c(1, 2) - c(2, 1), c(2, 0) - c(0, 2), c(0, 1) - c(1, 0)], axis=-2)


def w_mass_matrix(basis: LocalBasis, degree: int = 4) -> np.ndarray:
    rule = tet_rule(degree)
    v = basis.values(rule.points)
    return np.einsum("cqad,cqbd,q,c->cab", v, v, rule.scaled_weights(), basis.geom.volume)


def dof_norm_matrix(basis: LocalBasis) -> np.ndarray:
    """Gram matrix of h^2 sum_e |Q_e^k(v.t)|^2 + h^3 sum_F |Q_F^0(curl v x n)|^2.

    Edge projections come from the edge moments (orthogonal edge
    polynomials); face projections are face means of (curl v) x n.
    """
    geom = basis.geom
    k = int(basis.family[-1])
    h = geom.diameter
    mom = _edge_moments(geom, PolySource(geom, basis.coeffs), k, k + 2)  # (nc, 6(k+1), nb)
    mom = mom.reshape(len(geom), 6, k + 1, -1)
    le = geom.edge_lengths
    # int_e v.t_hat P_m ds = M_m / |e| * |e| ... moments use the unnormalised tangent
    c = np.array(_EDGE_POLY_SQNORM[: k + 1])
    proj = mom / le[:, :, None, None]  # mean of v.t_hat * P_m over the edge
    Ne = np.einsum("cemb,cema,m,ce->cab", proj, proj, 1.0 / c, le)
    cm = _face_curl_means(geom, PolySource(geom, basis.coeffs), 3)  # (nc, 4, nb, 3)
    cxn = np.cross(cm, geom.face_normals[:, :, None, :])
    Nf = np.einsum("clad,clbd,cl->cab", cxn, cxn, geom.face_areas)
    return (h**2)[:, None, None] * Ne + (h**3)[:, None, None] * Nf
