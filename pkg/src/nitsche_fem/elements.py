"""Linear (P1) triangle and bilinear (Q1) quadrilateral reference cells."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import quadrature

__all__ = ["ReferenceCell", "reference_cell", "P1", "Q1"]

P1 = "p1"
Q1 = "q1"


@dataclass(frozen=True)
class ReferenceCell:
    kind: str
    vertices: np.ndarray

    @property
    def nloc(self) -> int:
        return len(self.vertices)

    @property
    def measure(self) -> float:
        return 2.0 if self.kind == P1 else 4.0

    def shape(self, pts):
        """Shape function values, (n, nloc) for (n, 2) reference points."""
        x, y = np.asarray(pts, dtype=float).T
        if self.kind == P1:
            return np.column_stack([-(x + y) / 2, (1 + x) / 2, (1 + y) / 2])
        return np.column_stack([
            (1 - x) * (1 - y), (1 + x) * (1 - y), (1 + x) * (1 + y), (1 - x) * (1 + y),
        ]) / 4

    def grad(self, pts):
        """Reference gradients, (n, nloc, 2)."""
        x, y = np.asarray(pts, dtype=float).T
        n = len(x)
        if self.kind == P1:
            g = np.array([[-0.5, -0.5], [0.5, 0.0], [0.0, 0.5]])
            return np.broadcast_to(g, (n, 3, 2)).copy()
        gx = np.column_stack([-(1 - y), (1 - y), (1 + y), -(1 + y)]) / 4
        gy = np.column_stack([-(1 - x), -(1 + x), (1 + x), (1 - x)]) / 4
        return np.stack([gx, gy], axis=-1)

    def edge_points(self, local_edge: int, t):
        """Map ``t in [-1, 1]`` onto local edge ``local_edge`` (vertex e to e+1)."""
        a = self.vertices[local_edge]
        b = self.vertices[(local_edge + 1) % self.nloc]
        t = np.asarray(t, dtype=float).reshape(-1, 1)
        return a * (1 - t) / 2 + b * (1 + t) / 2

    def volume_rule(self, degree: int) -> quadrature.QuadratureRule:
        if self.kind == P1:
            return quadrature.triangle_rule(degree)
        return quadrature.gauss_square((degree + 2) // 2)

    def tabulate(self, rule):
        return self.shape(rule.points), self.grad(rule.points)

    def tabulate_edges(self, rule):
        """Shape values and gradients at an edge rule mapped on every local edge.

        Returns arrays of shape (nloc, nq, nloc) and (nloc, nq, nloc, 2).
        """
        t = rule.points[:, 0]
        pts = [self.edge_points(e, t) for e in range(self.nloc)]
        return (np.stack([self.shape(p) for p in pts]),
                np.stack([self.grad(p) for p in pts]))


@lru_cache(maxsize=None)
def reference_cell(kind: str) -> ReferenceCell:
    if kind == P1:
        return ReferenceCell(P1, quadrature.TRIANGLE_VERTICES.copy())
    if kind == Q1:
        return ReferenceCell(Q1, np.array([[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]]))
    raise ValueError(f"unknown element kind {kind!r} (expected 'p1' or 'q1')")
