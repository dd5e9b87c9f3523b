"""Analytic fields with exact derivatives.

Anything exposing ``value(x)`` (and ``curl``/``div``/``grad`` as needed) on
points ``x`` of shape ``(..., 3)`` can be interpolated.  ``PolyField`` covers
global polynomials of any degree; it is what the commuting-diagram checks
feed through the interpolation operators.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np


def _exponents(degree: int) -> np.ndarray:
    return np.array([e for e in product(range(degree + 1), repeat=3) if sum(e) <= degree])


@dataclass(frozen=True)
class PolyField:
    """Polynomial field sum_t coeffs[c, t] * x^exps[t]; ``ncomp`` 1 (scalar) or 3."""

    exps: np.ndarray  # (nterms, 3)
    coeffs: np.ndarray  # (ncomp, nterms)

    @property
    def ncomp(self) -> int:
        return self.coeffs.shape[0]

    @property
    def degree(self) -> int:
        nz = np.any(self.coeffs != 0, axis=0)
        return int(self.exps[nz].sum(axis=1).max()) if nz.any() else 0

    def _eval(self, coeffs: np.ndarray, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        mono = np.prod(x[..., None, :] ** self.exps, axis=-1)  # (..., nterms)
        out = mono @ coeffs.T
        return out[..., 0] if self.ncomp == 1 else out

    def partial(self, axis: int) -> "PolyField":
        e = self.exps.copy()
        factor = e[:, axis].astype(float)
        e[:, axis] = np.maximum(e[:, axis] - 1, 0)
        return PolyField(e, self.coeffs * factor)

    def component(self, c: int) -> "PolyField":
        return PolyField(self.exps, self.coeffs[c : c + 1])

    @staticmethod
    def stack(parts: list["PolyField"]) -> "PolyField":
        exps = np.concatenate([p.exps for p in parts])
        n = [len(p.exps) for p in parts]
        coeffs = np.zeros((len(parts), sum(n)))
        off = 0
        for i, p in enumerate(parts):
            coeffs[i, off : off + n[i]] = p.coeffs[0]
            off += n[i]
        return PolyField(exps, coeffs)

    def value(self, x):
        return self._eval(self.coeffs, x)

    # scalar fields
    def gradient_field(self) -> "PolyField":
        assert self.ncomp == 1
        return PolyField.stack([self.partial(a) for a in range(3)])

    def grad(self, x):
        if self.ncomp == 1:
            return self.gradient_field().value(x)
        return np.stack([self.partial(a).value(x) for a in range(3)], axis=-1)

    # vector fields
    def curl_field(self) -> "PolyField":
        assert self.ncomp == 3
        d = lambda c, a: self.component(c).partial(a)  # noqa: E731
        parts = []
        for c0, c1, a0, a1 in ((2, 1, 1, 2), (0, 2, 2, 0), (1, 0, 0, 1)):
            p, q = d(c0, a0), d(c1, a1)
            parts.append(PolyField(np.concatenate([p.exps, q.exps]),
                                   np.concatenate([p.coeffs, -q.coeffs], axis=1)))
        return PolyField.stack(parts)

    def div_field(self) -> "PolyField":
        assert self.ncomp == 3
        parts = [self.component(a).partial(a) for a in range(3)]
        return PolyField(np.concatenate([p.exps for p in parts]),
                         np.concatenate([p.coeffs for p in parts], axis=1))

    def curl(self, x):
        return self.curl_field().value(x)

    def div(self, x):
        return self.div_field().value(x)

    def grad_curl(self, x):
        return self.curl_field().grad(x)


def random_poly_field(rng: np.random.Generator, degree: int, ncomp: int = 3) -> PolyField:
    exps = _exponents(degree)
    return PolyField(exps, rng.standard_normal((ncomp, len(exps))))


def divergence_free_poly_field(rng: np.random.Generator, degree: int) -> PolyField:
    """curl of a random vector polynomial of one degree higher."""
    return random_poly_field(rng, degree + 1, 3).curl_field()
