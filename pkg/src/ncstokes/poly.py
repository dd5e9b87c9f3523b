"""Polynomials of degree <= 2 in the cell-centred coordinate y = x - x_K.

A scalar polynomial is a coefficient array ``(..., 10)`` over the monomials
``MONOMIALS``; a vector polynomial is ``(..., 3, 10)``.  Every local shape
function in this package lives in P2, so these few operations cover
evaluation, curl, divergence and gradients exactly.
"""
from __future__ import annotations

import numpy as np

MONOMIALS = np.array(
    [(0, 0, 0), (1, 0, 0), (0, 1, 0), (0, 0, 1),
     (2, 0, 0), (1, 1, 0), (1, 0, 1), (0, 2, 0), (0, 1, 1), (0, 0, 2)]
)
NMONO = len(MONOMIALS)
_INDEX = {tuple(m): i for i, m in enumerate(MONOMIALS)}


def _derivative_matrices() -> np.ndarray:
    # D[a, i, j]: coefficient of monomial i in d/dy_a of monomial j
    D = np.zeros((3, NMONO, NMONO))
    for j, m in enumerate(MONOMIALS):
        for a in range(3):
            if m[a] > 0:
                mm = m.copy()
                mm[a] -= 1
                D[a, _INDEX[tuple(mm)], j] = m[a]
    return D


def _product_table() -> np.ndarray:
    # MUL[i, j, k] = 1 if monomial_i * monomial_j == monomial_k (degree <= 2)
    T = np.zeros((NMONO, NMONO, NMONO))
    for i, a in enumerate(MONOMIALS):
        for j, b in enumerate(MONOMIALS):
            k = _INDEX.get(tuple(a + b))
            if k is not None:
                T[i, j, k] = 1.0
    return T


DERIV = _derivative_matrices()
MUL = _product_table()


def monomials(y: np.ndarray) -> np.ndarray:
    """Monomial values (..., 10) at points y (..., 3)."""
    y0, y1, y2 = y[..., 0], y[..., 1], y[..., 2]
    one = np.ones_like(y0)
    return np.stack([one, y0, y1, y2, y0 * y0, y0 * y1, y0 * y2, y1 * y1, y1 * y2, y2 * y2], axis=-1)


def linear(c0, grad) -> np.ndarray:
    """Scalar affine polynomial c0 + grad . y."""
    c0 = np.asarray(c0, dtype=float)
    grad = np.asarray(grad, dtype=float)
    out = np.zeros(grad.shape[:-1] + (NMONO,))
    out[..., 0] = c0
    out[..., 1:4] = grad
    return out


def constant_vector(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    out = np.zeros(v.shape + (NMONO,))
    out[..., 0] = v
    return out


def y_cross(c) -> np.ndarray:
    """Linear vector field y x c for constant vectors c (..., 3)."""
    c = np.asarray(c, dtype=float)
    out = np.zeros(c.shape[:-1] + (3, NMONO))
    # (y x c)_0 = y1 c2 - y2 c1, etc.
    out[..., 0, 2] = c[..., 2]
    out[..., 0, 3] = -c[..., 1]
    out[..., 1, 3] = c[..., 0]
    out[..., 1, 1] = -c[..., 2]
    out[..., 2, 1] = c[..., 1]
    out[..., 2, 2] = -c[..., 0]
    return out


def mul(a, b) -> np.ndarray:
    """Product of scalar polynomials (degrees must add to <= 2)."""
    return np.einsum("...i,...j,ijk->...k", a, b, MUL)


def smul(s, v) -> np.ndarray:
    """Scalar polynomial times vector polynomial."""
    return np.einsum("...i,...cj,ijk->...ck", s, v, MUL)


def evaluate(coeffs: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Evaluate a batch of polynomials at per-cell points.

    coeffs: (nc, nb, *shape, 10); y: (nc, nq, 3).
    Returns (nc, nq, nb, *shape).
    """
    M = monomials(y)
    return np.einsum("cqm,cb...m->cqb...", M, coeffs)


def deriv(coeffs: np.ndarray, axis: int) -> np.ndarray:
    return coeffs @ DERIV[axis].T


def gradient(coeffs: np.ndarray) -> np.ndarray:
    """Gradient of scalar polynomials: (..., 10) -> (..., 3, 10)."""
    return np.stack([deriv(coeffs, a) for a in range(3)], axis=-2)


def curl(coeffs: np.ndarray) -> np.ndarray:
    """Curl of vector polynomials: (..., 3, 10) -> (..., 3, 10)."""
    v0, v1, v2 = coeffs[..., 0, :], coeffs[..., 1, :], coeffs[..., 2, :]
    return np.stack(
        [deriv(v2, 1) - deriv(v1, 2), deriv(v0, 2) - deriv(v2, 0), deriv(v1, 0) - deriv(v0, 1)],
        axis=-2,
    )


def divergence(coeffs: np.ndarray) -> np.ndarray:
    return sum(deriv(coeffs[..., a, :], a) for a in range(3))


def jacobian_of_linear(coeffs: np.ndarray) -> np.ndarray:
    """Constant Jacobian d v_i / d y_a of vector fields of degree <= 1."""
    return coeffs[..., 1:4]
