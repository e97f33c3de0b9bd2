"""One-dimensional clamped polynomial bases and their Gram matrices.

Basis function ``j`` on ``[0, h]`` is ``(1 - xi**2)**l * P_j(xi)`` with
``xi = 2x/h - 1`` and ``P_j`` the Legendre polynomial, i.e. a constant
multiple of ``(x(h - x))**l p_j(x)``. All functions and their first ``l - 1``
derivatives vanish at both ends. Everything is stored as Legendre series in
``xi`` so derivatives and products stay exact.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from numpy.polynomial import legendre as L

from .errors import SolverError, ValidationError

MAX_BASIS = 32


def quadrature_points(count: int, order: int) -> int:
    """Gauss-Legendre point count that integrates every assembled entry exactly."""
    return -(-(2 * (count + 2 * order) + 1) // 2) + 2


def min_exact_points(count: int, order: int, da: int = 0, db: int = 0) -> int:
    deg = 2 * (2 * order + count - 1) - da - db
    return max(1, -(-(deg + 1) // 2))


@lru_cache(maxsize=None)
def _gauss(npts: int):
    return L.leggauss(npts)


@lru_cache(maxsize=None)
def _reference_coefficients(order: int, count: int) -> tuple[tuple[np.ndarray, ...], ...]:
    """Legendre coefficients of every derivative ``d^r/dxi^r`` for r = 0..order."""
    bubble = L.poly2leg(np.polynomial.polynomial.polypow([1.0, 0.0, -1.0], order))
    out = []
    for j in range(count):
        pj = np.zeros(j + 1)
        pj[-1] = 1.0
        c = L.legmul(bubble, pj)
        derivs = [c]
        for _ in range(order):
            derivs.append(L.legder(derivs[-1]))
        out.append(tuple(derivs))
    return tuple(out)


@dataclass(frozen=True)
class Basis1D:
    order: int
    length: float
    count: int
    _coef: tuple = field(repr=False, compare=False, default=())

    @property
    def degrees(self) -> list[int]:
        return [2 * self.order + j for j in range(self.count)]

    def derivative(self, j: int, r: int, x) -> np.ndarray:
        """r-th x-derivative of basis function ``j`` at physical points ``x``."""
        xi = 2.0 * np.asarray(x, dtype=float) / self.length - 1.0
        scale = (2.0 / self.length) ** r
        if r >= len(self._coef[j]):
            c = L.legder(self._coef[j][-1], r - len(self._coef[j]) + 1)
        else:
            c = self._coef[j][r]
        return scale * L.legval(xi, c)

    def __call__(self, j: int, x) -> np.ndarray:
        return self.derivative(j, 0, x)

    def tabulate(self, r: int, xi: np.ndarray) -> np.ndarray:
        """Matrix ``T[j, q]`` of r-th physical derivatives at reference points ``xi``."""
        scale = (2.0 / self.length) ** r
        return np.array([scale * L.legval(xi, c[r]) for c in self._coef])

    def gram(self, da: int, db: int, npts: int | None = None) -> np.ndarray:
        """``G[i, j] = integral over [0, h] of phi_i^(da) * phi_j^(db)``."""
        if npts is None:
            npts = quadrature_points(self.count, self.order)
        need = min_exact_points(self.count, self.order, da, db)
        if npts < need:
            raise SolverError("QUADRATURE_INEXACT", f"{npts} points < {need} needed for exactness")
        xi, w = _gauss(npts)
        ta = self.tabulate(da, xi)
        tb = ta if db == da else self.tabulate(db, xi)
        g = (ta * (0.5 * self.length * w)) @ tb.T
        if da == db:
            g = 0.5 * (g + g.T)
        return g


def build_basis_1d(order: int, length: float, count: int) -> Basis1D:
    if order < 1:
        raise ValidationError("INVALID_ORDER", f"basis order must be >= 1, got {order}")
    if not length > 0:
        raise ValidationError("BAD_DOMAIN", f"length must be positive, got {length}")
    if count < 1:
        raise ValidationError("BAD_DEGREE", f"basis count must be >= 1, got {count}")
    if count > MAX_BASIS:
        raise SolverError("N_TOO_LARGE", f"basis count {count} exceeds cap {MAX_BASIS}")
    return Basis1D(order, float(length), count, _reference_coefficients(order, count))
