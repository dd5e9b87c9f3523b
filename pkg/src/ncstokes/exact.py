"""Manufactured solution u = curl(0, 0, psi), psi = s(x) s(y) s(z), s = sin^3(pi t).

All derivatives come from the closed form
sin^3(a) = (3 sin a - sin 3a) / 4, so the m-th derivative of s is

    s^(m)(t) = (3 pi^m sin(pi t + m pi/2) - (3 pi)^m sin(3 pi t + m pi/2)) / 4.
"""
from __future__ import annotations

import numpy as np

PI = np.pi


def sin3_derivative(t: np.ndarray, m: int) -> np.ndarray:
    """m-th derivative of sin^3(pi t)."""
    shift = m * PI / 2.0
    return (3.0 * PI**m * np.sin(PI * t + shift) - (3.0 * PI) ** m * np.sin(3.0 * PI * t + shift)) / 4.0


class _Psi:
    """Mixed partials of psi at a fixed set of points, memoised per 1-D order."""

    def __init__(self, x: np.ndarray):
        x = np.asarray(x, dtype=float)
        self._t = (x[..., 0], x[..., 1], x[..., 2])
        self._tab: dict = {}

    def _s(self, axis: int, m: int):
        key = (axis, m)
        if key not in self._tab:
            self._tab[key] = sin3_derivative(self._t[axis], m)
        return self._tab[key]

    def __call__(self, a: int, b: int, c: int) -> np.ndarray:
        return self._s(0, a) * self._s(1, b) * self._s(2, c)


def _bilaplacian_terms():
    # Delta^2 = dxxxx + dyyyy + dzzzz + 2 (dxxyy + dxxzz + dyyzz)
    return [((4, 0, 0), 1.0), ((0, 4, 0), 1.0), ((0, 0, 4), 1.0),
            ((2, 2, 0), 2.0), ((2, 0, 2), 2.0), ((0, 2, 2), 2.0)]


class QuadCurlExact:
    """Exact solution of the quad-curl test problem on the unit cube.

    Methods take points of shape (..., 3) and return (..., 3) vectors or
    (..., 3, 3) gradients with ``[..., i, a] = d_a (curl u)_i``.
    """

    def value(self, x):
        P = _Psi(x)
        return np.stack([P(0, 1, 0), -P(1, 0, 0), np.zeros_like(P(0, 0, 0))], axis=-1)

    def curl(self, x):
        P = _Psi(x)
        return np.stack([P(1, 0, 1), P(0, 1, 1), -P(2, 0, 0) - P(0, 2, 0)], axis=-1)

    def div(self, x):
        return np.zeros(np.shape(x)[:-1])

    def grad_curl(self, x):
        P = _Psi(x)
        rows = [
            [P(2, 0, 1), P(1, 1, 1), P(1, 0, 2)],
            [P(1, 1, 1), P(0, 2, 1), P(0, 1, 2)],
            [-P(3, 0, 0) - P(1, 2, 0), -P(2, 1, 0) - P(0, 3, 0), -P(2, 0, 1) - P(0, 2, 1)],
        ]
        return np.stack([np.stack(r, axis=-1) for r in rows], axis=-2)

    def load(self, x):
        """f = curl^4 u = (d_y Delta^2 psi, -d_x Delta^2 psi, 0)."""
        P = _Psi(x)
        fy = sum(w * P(a, b + 1, c) for (a, b, c), w in _bilaplacian_terms())
        fx = sum(w * P(a + 1, b, c) for (a, b, c), w in _bilaplacian_terms())
        return np.stack([fy, -fx, np.zeros_like(fx)], axis=-1)

    def load_field(self) -> "LoadField":
        return LoadField(self)


class LoadField:
    """The right-hand side f exposed through the ``value`` interface."""

    def __init__(self, exact: QuadCurlExact):
        self.exact = exact

    def value(self, x):
        return self.exact.load(x)


def exact_fields(p) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """(u, curl u, grad curl u, f) at point(s) p."""
    e = QuadCurlExact()
    p = np.asarray(p, dtype=float)
    return e.value(p), e.curl(p), e.grad_curl(p), e.load(p)
