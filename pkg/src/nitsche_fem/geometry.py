"""Convex polygonal domains, their boundary partition and local polar frames."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

__all__ = [
    "GeometryError",
    "Point2",
    "PolarFrame",
    "PolygonDomain",
    "interior_angle",
    "locate_on_boundary",
    "rectangle",
    "to_local_polar",
]


class GeometryError(ValueError):
    pass


class Point2(NamedTuple):
    x: float
    y: float


def _cross(a, b):
    return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]


@dataclass(frozen=True)
class PolarFrame:
    """Polar coordinates centred at a boundary point.

    ``theta`` is measured counter-clockwise from ``direction`` (the unit
    vector along the edge leaving the origin) and reaches ``omega`` on the
    edge arriving at it.
    """

    origin: np.ndarray
    direction: np.ndarray
    omega: float

    def polar(self, points):
        """Vectorised ``(r, theta)`` for an (n, 2) array or a single point.

        For points of the closed wedge ``theta`` lies in ``[0, omega]``;
        ``theta`` is 0 at the origin itself.
        """
        p = np.asarray(points, dtype=float)
        d = p - self.origin
        r = np.hypot(d[..., 0], d[..., 1])
        t = np.arctan2(_cross(self.direction, d), d @ self.direction)
        # arctan2 returns (-pi, pi]; a point on the arriving edge of a
        # straight-angle frame may come back as -pi from a signed zero
        t = np.where(t < -0.5 * np.pi, t + 2.0 * np.pi, t)
        t = np.clip(t, 0.0, self.omega)
        t = np.where(r == 0.0, 0.0, t)
        return r, t

    def to_cartesian(self, r, theta):
        r = np.asarray(r, dtype=float)
        theta = np.asarray(theta, dtype=float)
        c, s = np.cos(theta), np.sin(theta)
        dx, dy = self.direction
        x = self.origin[0] + r * (c * dx - s * dy)
        y = self.origin[1] + r * (s * dx + c * dy)
        return np.stack([x, y], axis=-1)


@dataclass(frozen=True, eq=False)
class PolygonDomain:
    """Convex polygon with declared boundary discontinuity points.

    Parameters
    ----------
    vertices : (n, 2) array_like
        Polygon corners in counter-clockwise order.
    discontinuity_points : (m, 2) array_like, optional
        Boundary points where the Dirichlet data jumps. They may be corners
        or lie inside an edge.

    The boundary partition ``points`` consists of all corners together with
    the discontinuity points, ordered counter-clockwise starting at the
    first vertex. ``edges[i]`` joins ``points[i]`` to ``points[i + 1]``
    (indices cyclic) and is always a straight segment.
    """

    vertices: np.ndarray
    discontinuity_points: np.ndarray = field(default_factory=lambda: np.zeros((0, 2)))
    points: np.ndarray = field(init=False)
    angles: np.ndarray = field(init=False)
    singular_indices: tuple = field(init=False)

    def __post_init__(self):
        V = np.array(self.vertices, dtype=float).reshape(-1, 2)
        D = np.array(self.discontinuity_points, dtype=float).reshape(-1, 2)
        if len(V) < 3:
            raise GeometryError("a polygon needs at least three vertices")
        if not np.all(np.isfinite(V)) or not np.all(np.isfinite(D)):
            raise GeometryError("non-finite coordinates")
        area = 0.5 * np.sum(_cross(V, np.roll(V, -1, axis=0)))
        if area <= 0:
            raise GeometryError("vertices must be in counter-clockwise order")
        e = np.roll(V, -1, axis=0) - V
        turn = _cross(e, np.roll(e, -1, axis=0))
        scale = np.max(np.abs(e)) ** 2
        if np.any(turn <= 1e-14 * scale):
            raise GeometryError("polygon must be strictly convex (no reentrant or flat corners)")
        object.__setattr__(self, "vertices", V)
        object.__setattr__(self, "discontinuity_points", D)

        diam = self.diameter
        tol = 1e-10 * diam
        entries = [(k, 0.0, V[k]) for k in range(len(V))]
        singular = []
        for p in D:
            k, t = self._locate_on_polygon(p, tol)
            if t > 1.0 - 1e-12:
                k, t = (k + 1) % len(V), 0.0
            if t < 1e-12:
                t = 0.0
                p = V[k]
            entries.append((k, t, p))
        entries.sort(key=lambda z: (z[0], z[1]))
        pts = []
        for k, t, p in entries:
            if pts and np.hypot(*(pts[-1][2] - p)) <= tol:
                continue
            pts.append((k, t, np.asarray(p, dtype=float)))
        P = np.array([p for _, _, p in pts])
        for p in D:
            dist = np.hypot(*(P - p).T)
            i = int(np.argmin(dist))
            if i in singular:
                raise GeometryError("discontinuity points must be distinct")
            singular.append(i)
        object.__setattr__(self, "points", P)
        object.__setattr__(self, "singular_indices", tuple(sorted(singular)))
        object.__setattr__(self, "angles", np.array([self._angle(i) for i in range(len(P))]))
        for arr in (self.vertices, self.discontinuity_points, self.points, self.angles):
            arr.setflags(write=False)

    # -- construction helpers -------------------------------------------------

    def _locate_on_polygon(self, p, tol):
        V = self.vertices
        best = (math.inf, -1, 0.0)
        for k in range(len(V)):
            a, b = V[k], V[(k + 1) % len(V)]
            d = b - a
            t = float(np.clip(np.dot(p - a, d) / np.dot(d, d), 0.0, 1.0))
            dist = float(np.hypot(*(a + t * d - p)))
            if dist < best[0]:
                best = (dist, k, t)
        if best[0] > tol:
            raise GeometryError(f"point {tuple(p)} is not on the polygon boundary")
        return best[1], best[2]

    def _angle(self, i):
        P = self.points
        n = len(P)
        d_next = P[(i + 1) % n] - P[i]
        d_prev = P[(i - 1) % n] - P[i]
        c = _cross(d_next, d_prev)
        if abs(c) <= 1e-12 * np.linalg.norm(d_next) * np.linalg.norm(d_prev):
            return math.pi
        return math.atan2(c, float(np.dot(d_next, d_prev)))

    # -- derived quantities ---------------------------------------------------

    @property
    def M(self) -> int:
        """Number of boundary partition points (and edges)."""
        return len(self.points)

    @property
    def diameter(self) -> float:
        V = self.vertices
        return float(np.max(np.hypot(*(V[:, None, :] - V[None, :, :]).transpose(2, 0, 1))))

    @property
    def area(self) -> float:
        V = self.vertices
        return float(0.5 * np.sum(_cross(V, np.roll(V, -1, axis=0))))

    @property
    def centroid(self) -> np.ndarray:
        V = self.vertices
        W = np.roll(V, -1, axis=0)
        c = _cross(V, W)
        return np.array([np.sum((V[:, 0] + W[:, 0]) * c), np.sum((V[:, 1] + W[:, 1]) * c)]) / (6 * self.area)

    def edge(self, i: int):
        """Endpoints ``(A_i, A_{i+1})`` of edge ``i`` (cyclic)."""
        n = self.M
        return self.points[i % n], self.points[(i + 1) % n]

    def edge_length(self, i: int) -> float:
        a, b = self.edge(i)
        return float(np.hypot(*(b - a)))

    def tangent(self, i: int) -> np.ndarray:
        a, b = self.edge(i)
        return (b - a) / np.hypot(*(b - a))

    def outward_normal(self, i: int) -> np.ndarray:
        t = self.tangent(i)
        return np.array([t[1], -t[0]])

    def frame(self, i: int) -> PolarFrame:
        i %= self.M
        return PolarFrame(self.points[i].copy(), self.tangent(i), float(self.angles[i]))

    def contains(self, points, tol: float = 0.0):
        """Vectorised closed-domain membership test."""
        p = np.atleast_2d(np.asarray(points, dtype=float))
        V = self.vertices
        inside = np.ones(len(p), dtype=bool)
        for k in range(len(V)):
            a, b = V[k], V[(k + 1) % len(V)]
            d = b - a
            inside &= _cross(d, p - a) >= -tol * np.hypot(*d)
        return inside

    def exterior_turning(self) -> np.ndarray:
        V = self.vertices
        e = np.roll(V, -1, axis=0) - V
        en = np.roll(e, -1, axis=0)
        return np.arctan2(_cross(e, en), np.sum(e * en, axis=1))


def rectangle(x0, x1, y0, y1, discontinuity_points=()) -> PolygonDomain:
    return PolygonDomain(
        np.array([[x0, y0], [x1, y0], [x1, y1], [x0, y1]], dtype=float),
        np.array(discontinuity_points, dtype=float).reshape(-1, 2),
    )


def interior_angle(domain: PolygonDomain, i: int) -> float:
    """Interior angle at partition point ``i``; exactly ``pi`` mid-edge."""
    if not 0 <= i < domain.M:
        raise IndexError(f"partition index {i} out of range 0..{domain.M - 1}")
    return float(domain.angles[i])


def to_local_polar(frame: PolarFrame, p: Sequence[float]):
    r, t = frame.polar(np.asarray(p, dtype=float))
    return float(r), float(t)


def locate_on_boundary(domain: PolygonDomain, p, tol: float | None = None):
    """Return ``(i, t)`` with ``p = A_i + t (A_{i+1} - A_i)``.

    At a partition point the edge starting there (``t = 0``) is returned.
    Raises :class:`GeometryError` when ``p`` is farther than ``tol`` from the
    boundary (default ``1e-10`` times the diameter).
    """
    p = np.asarray(p, dtype=float)
    if tol is None:
        tol = 1e-10 * domain.diameter
    best = None
    for i in range(domain.M):
        a, b = domain.edge(i)
        d = b - a
        L2 = float(np.dot(d, d))
        t = float(np.clip(np.dot(p - a, d) / L2, 0.0, 1.0))
        dist = float(np.hypot(*(a + t * d - p)))
        if dist > tol:
            continue
        if t * math.sqrt(L2) <= tol:
            return i, 0.0
        if best is None or dist < best[0]:
            best = (dist, i, t)
    if best is None:
        raise GeometryError(f"point {tuple(p)} is not on the boundary (tol={tol:g})")
    _, i, t = best
    if (1.0 - t) * domain.edge_length(i) <= tol:
        return (i + 1) % domain.M, 0.0
    return i, t
