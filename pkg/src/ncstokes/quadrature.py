"""Quadrature rules on the reference edge, triangle and tetrahedron.

Rules are collapsed-coordinate (conical product) Gauss-Jacobi rules, so any
exactness degree is available, all weights are positive and all points are
strictly interior.  Points are stored in barycentric coordinates so one rule
serves every affine cell.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import ceil

import numpy as np
from scipy.special import roots_jacobi

MAX_DEGREE = 60

#: measure of the reference simplex in each dimension
REFERENCE_MEASURE = {1: 1.0, 2: 0.5, 3: 1.0 / 6.0}


@dataclass(frozen=True)
class QuadratureRule:
    dim: int
    points: np.ndarray  # (nq, dim + 1) barycentric coordinates
    weights: np.ndarray  # (nq,) summing to the reference measure
    degree: int

    @property
    def npoints(self) -> int:
        return len(self.weights)

    def scaled_weights(self) -> np.ndarray:
        """Weights normalised to sum to one (multiply by the cell measure)."""
        return self.weights / REFERENCE_MEASURE[self.dim]


def _gauss_jacobi01(m: int, alpha: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes/weights for int_0^1 g(a) (1 - a)^alpha da."""
    t, w = roots_jacobi(m, alpha, 0)
    return (1.0 + t) / 2.0, w / 2.0 ** (alpha + 1)


@lru_cache(maxsize=None)
def simplex_rule(dim: int, degree: int) -> QuadratureRule:
    """Return a rule on the reference ``dim``-simplex exact for ``degree``."""
    if dim not in (1, 2, 3):
        raise ValueError(f"unsupported simplex dimension {dim}")
    if not 0 <= degree <= MAX_DEGREE:
        raise ValueError(f"unsupported quadrature degree {degree} (0..{MAX_DEGREE})")
    m = max(1, ceil((degree + 1) / 2))
    if dim == 1:
        a, wa = _gauss_jacobi01(m, 0)
        pts = np.column_stack([1.0 - a, a])
        w = wa
    elif dim == 2:
        a, wa = _gauss_jacobi01(m, 1)
        b, wb = _gauss_jacobi01(m, 0)
        A, B = np.meshgrid(a, b, indexing="ij")
        x = A.ravel()
        y = (B * (1.0 - A)).ravel()
        w = np.outer(wa, wb).ravel()
        pts = np.column_stack([1.0 - x - y, x, y])
    else:
        a, wa = _gauss_jacobi01(m, 2)
        b, wb = _gauss_jacobi01(m, 1)
        c, wc = _gauss_jacobi01(m, 0)
        A, B, C = np.meshgrid(a, b, c, indexing="ij")
        x = A.ravel()
        y = (B * (1.0 - A)).ravel()
        z = (C * (1.0 - A) * (1.0 - B)).ravel()
        w = np.einsum("i,j,k->ijk", wa, wb, wc).ravel()
        pts = np.column_stack([1.0 - x - y - z, x, y, z])
    pts.setflags(write=False)
    w.setflags(write=False)
    return QuadratureRule(dim=dim, points=pts, weights=w, degree=degree)


def edge_rule(degree: int) -> QuadratureRule:
    return simplex_rule(1, degree)


def triangle_rule(degree: int) -> QuadratureRule:
    return simplex_rule(2, degree)


def tet_rule(degree: int) -> QuadratureRule:
    return simplex_rule(3, degree)
