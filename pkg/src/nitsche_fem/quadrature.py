"""Quadrature rules on the reference triangle, square and edge.

Reference cells follow the (-1, 1) convention used throughout the package:

* triangle ``T = {(x, y): -1 < x < 1, -1 < y < -x}`` with area 2,
* square ``S = (-1, 1)^2`` with area 4,
* edge ``[-1, 1]`` with length 2.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import roots_jacobi

__all__ = [
    "QuadratureRule",
    "gauss_edge",
    "gauss_square",
    "triangle_rule",
    "TRIANGLE_VERTICES",
]

TRIANGLE_VERTICES = np.array([[-1.0, -1.0], [1.0, -1.0], [-1.0, 1.0]])


@dataclass(frozen=True)
class QuadratureRule:
    points: np.ndarray
    weights: np.ndarray
    degree: int

    def __post_init__(self):
        self.points.setflags(write=False)
        self.weights.setflags(write=False)

    def __len__(self):
        return len(self.weights)

    @property
    def measure(self) -> float:
        return float(np.sum(self.weights))


@lru_cache(maxsize=None)
def gauss_edge(npoints: int = 4) -> QuadratureRule:
    """Gauss-Legendre rule on [-1, 1], exact up to degree ``2n - 1``."""
    x, w = leggauss(npoints)
    return QuadratureRule(x[:, None].copy(), w, 2 * npoints - 1)


@lru_cache(maxsize=None)
def gauss_square(npoints: int = 3) -> QuadratureRule:
    """Tensor Gauss-Legendre rule on (-1, 1)^2."""
    x, w = leggauss(npoints)
    X, Y = np.meshgrid(x, x, indexing="ij")
    W = np.outer(w, w)
    pts = np.column_stack([X.ravel(), Y.ravel()])
    return QuadratureRule(pts, W.ravel().copy(), 2 * npoints - 1)


# Symmetric 6-point rule of degree 4 (Dunavant). Barycentric orbits of the
# form (a, b, b) with weights normalised to a unit-area triangle.
_DUNAVANT4 = (
    (0.108103018168070, 0.445948490915965, 0.223381589678011),
    (0.816847572980459, 0.091576213509771, 0.109951743655322),
)


def _dunavant4():
    bary, wts = [], []
    for a, b, w in _DUNAVANT4:
        for perm in ((a, b, b), (b, a, b), (b, b, a)):
            bary.append(perm)
            wts.append(w)
    bary = np.array(bary)
    pts = bary @ TRIANGLE_VERTICES
    # area of the reference triangle is 2
    return QuadratureRule(pts, 2.0 * np.array(wts), 4)


def _collapsed(n: int):
    """Conical product rule with ``n^2`` points, exact to degree ``2n - 1``.

    The square is collapsed onto the triangle with the Duffy map; the
    Jacobian factor is absorbed by Gauss-Jacobi(1, 0) points in the
    collapsed direction.
    """
    s, ws = leggauss(n)
    t, wt = roots_jacobi(n, 1.0, 0.0)
    pts, wts = [], []
    for ti, wti in zip(t, wt):
        for si, wsi in zip(s, ws):
            # (s, t) in (-1,1)^2 -> triangle; x spans (-1, -y) at height y = t
            y = ti
            x = -1.0 + 0.5 * (1.0 + si) * (1.0 - ti)
            pts.append((x, y))
            wts.append(0.5 * wsi * wti)
    return QuadratureRule(np.array(pts), np.array(wts), 2 * n - 1)


@lru_cache(maxsize=None)
def triangle_rule(degree: int) -> QuadratureRule:
    """Return a rule on the reference triangle exact to at least ``degree``."""
    if degree <= 4:
        return _dunavant4()
    n = (degree + 2) // 2
    return _collapsed(n)
