"""Structured conforming meshes of rectangles and uniform (red) refinement."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .elements import P1, Q1, reference_cell
from .geometry import PolygonDomain

__all__ = [
    "Mesh",
    "MeshError",
    "UnsupportedDomainError",
    "generate_initial",
    "mesh_size",
    "refine_uniform",
    "uniform_sequence",
    "write_mesh",
]


class MeshError(ValueError):
    pass


class UnsupportedDomainError(MeshError):
    pass


def _local_edges(k):
    return np.array([(e, (e + 1) % k) for e in range(k)])


@dataclass(frozen=True, eq=False)
class Mesh:
    """Homogeneous P1 or Q1 mesh of a polygon.

    Boundary facets are listed in element order; ``facet_nodes`` runs
    counter-clockwise along the boundary, ``facet_edge`` is the index of the
    domain partition edge that contains the facet.
    """

    domain: PolygonDomain
    nodes: np.ndarray
    elements: np.ndarray
    kind: str
    facet_nodes: np.ndarray = field(init=False)
    facet_element: np.ndarray = field(init=False)
    facet_local_edge: np.ndarray = field(init=False)
    facet_edge: np.ndarray = field(init=False)
    facet_normal: np.ndarray = field(init=False)

    def __post_init__(self):
        nodes = np.ascontiguousarray(self.nodes, dtype=float)
        elements = np.ascontiguousarray(self.elements, dtype=np.int64)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "elements", elements)
        k = elements.shape[1]
        if (self.kind, k) not in ((P1, 3), (Q1, 4)):
            raise MeshError(f"{self.kind} mesh with {k}-node elements")

        le = _local_edges(k)
        E = elements[:, le]                       # (nel, k, 2)
        keys = np.sort(E.reshape(-1, 2), axis=1)
        _, inv, counts = np.unique(keys, axis=0, return_inverse=True, return_counts=True)
        inv = inv.ravel()
        if np.any(counts > 2):
            raise MeshError("non-manifold mesh: an edge is shared by more than two elements")
        bmask = counts[inv] == 1
        flat = np.nonzero(bmask)[0]
        fel, fle = flat // k, flat % k
        fn = E.reshape(-1, 2)[flat]
        object.__setattr__(self, "facet_nodes", fn)
        object.__setattr__(self, "facet_element", fel)
        object.__setattr__(self, "facet_local_edge", fle)

        d = nodes[fn[:, 1]] - nodes[fn[:, 0]]
        L = np.hypot(d[:, 0], d[:, 1])
        object.__setattr__(self, "facet_normal", np.column_stack([d[:, 1], -d[:, 0]]) / L[:, None])
        object.__setattr__(self, "facet_edge", self._tag_facets(fn))
        for arr in (self.nodes, self.elements, self.facet_nodes, self.facet_element,
                    self.facet_local_edge, self.facet_edge, self.facet_normal):
            arr.setflags(write=False)

    def _tag_facets(self, fn):
        dom = self.domain
        tol = 1e-10 * dom.diameter
        tags = np.full(len(fn), -1, dtype=np.int64)
        a_pts, b_pts = self.nodes[fn[:, 0]], self.nodes[fn[:, 1]]
        for i in range(dom.M):
            a, b = dom.edge(i)
            d = b - a
            L2 = d @ d

            def on_edge(p):
                t = (p - a) @ d / L2
                dist = np.abs((p[:, 0] - a[0]) * d[1] - (p[:, 1] - a[1]) * d[0]) / np.sqrt(L2)
                return (dist <= tol) & (t >= -tol) & (t <= 1 + tol)

            hit = on_edge(a_pts) & on_edge(b_pts)
            tags[hit & (tags < 0)] = i
        if np.any(tags < 0):
            bad = int(np.nonzero(tags < 0)[0][0])
            raise MeshError(
                f"boundary facet {bad} ({self.nodes[fn[bad, 0]]}, {self.nodes[fn[bad, 1]]}) "
                "does not lie on a single boundary edge")
        return tags

    # ------------------------------------------------------------------

    @property
    def nnodes(self) -> int:
        return len(self.nodes)

    @property
    def nelements(self) -> int:
        return len(self.elements)

    @property
    def reference(self):
        return reference_cell(self.kind)

    @property
    def coords(self) -> np.ndarray:
        return self.nodes[self.elements]

    def diameters(self) -> np.ndarray:
        c = self.coords
        diff = c[:, :, None, :] - c[:, None, :, :]
        return np.sqrt(np.max(np.sum(diff * diff, axis=-1), axis=(1, 2)))

    @property
    def h(self) -> float:
        return float(np.max(self.diameters()))

    def areas(self) -> np.ndarray:
        c = self.coords
        x, y = c[..., 0], c[..., 1]
        return 0.5 * np.sum(x * np.roll(y, -1, axis=1) - np.roll(x, -1, axis=1) * y, axis=1)

    def facet_lengths(self) -> np.ndarray:
        d = self.nodes[self.facet_nodes[:, 1]] - self.nodes[self.facet_nodes[:, 0]]
        return np.hypot(d[:, 0], d[:, 1])

    def unique_edges(self) -> np.ndarray:
        le = _local_edges(self.elements.shape[1])
        keys = np.sort(self.elements[:, le].reshape(-1, 2), axis=1)
        return np.unique(keys, axis=0)

    def node_index(self, p, tol=None) -> int:
        tol = 1e-10 * self.domain.diameter if tol is None else tol
        d = np.hypot(*(self.nodes - np.asarray(p, dtype=float)).T)
        i = int(np.argmin(d))
        if d[i] > tol:
            raise MeshError(f"{tuple(p)} is not a mesh node")
        return i

    def check(self):
        """Raise :class:`MeshError` if a structural invariant is violated."""
        if np.any(self.areas() <= 0):
            raise MeshError("element with non-positive orientation")
        for p in self.domain.points:
            self.node_index(p)
        V, E, F = self.nnodes, len(self.unique_edges()), self.nelements
        if V - E + F != 1:
            raise MeshError(f"Euler characteristic V-E+F = {V - E + F} != 1")

    def permuted(self, perm) -> "Mesh":
        """Same mesh with node ``i`` renumbered as ``perm[i]``."""
        perm = np.asarray(perm)
        nodes = np.empty_like(self.nodes)
        nodes[perm] = self.nodes
        return Mesh(self.domain, nodes, perm[self.elements], self.kind)


def mesh_size(m: Mesh) -> float:
    return m.h


def _axis_rectangle(domain: PolygonDomain):
    V = domain.vertices
    if len(V) != 4:
        raise UnsupportedDomainError("structured generation supports axis-aligned rectangles only")
    x0, y0 = V.min(axis=0)
    x1, y1 = V.max(axis=0)
    corners = {(x0, y0), (x1, y0), (x1, y1), (x0, y1)}
    if {tuple(v) for v in V} != corners:
        raise UnsupportedDomainError("structured generation supports axis-aligned rectangles only")
    return x0, x1, y0, y1


def generate_initial(domain: PolygonDomain, kind: str = P1, n0: int = 1) -> Mesh:
    """Structured grid with ``n0`` cells per unit length.

    Triangles split each cell along its (+1, +1) diagonal. Every boundary
    partition point must be a lattice node.
    """
    reference_cell(kind)
    if n0 < 1:
        raise MeshError("n0 must be >= 1")
    x0, x1, y0, y1 = _axis_rectangle(domain)
    counts = []
    for length in (x1 - x0, y1 - y0):
        n = n0 * length
        if abs(n - round(n)) > 1e-9 or round(n) < 1:
            raise UnsupportedDomainError(
                f"side length {length} is not a multiple of 1/n0 = {1 / n0}")
        counts.append(int(round(n)))
    nx, ny = counts
    xs = np.linspace(x0, x1, nx + 1)
    ys = np.linspace(y0, y1, ny + 1)
    X, Y = np.meshgrid(xs, ys)
    nodes = np.column_stack([X.ravel(), Y.ravel()])

    for p in domain.points:
        if np.min(np.hypot(*(nodes - p).T)) > 1e-10 * domain.diameter:
            raise UnsupportedDomainError(
                f"boundary point {tuple(p)} is not on the coarse grid (n0={n0})")

    j, i = np.meshgrid(np.arange(ny), np.arange(nx), indexing="ij")
    a = (j * (nx + 1) + i).ravel()
    b, c, d = a + 1, a + nx + 2, a + nx + 1
    if kind == P1:
        elements = np.stack([np.column_stack([a, b, c]), np.column_stack([a, c, d])], axis=1)
        elements = elements.reshape(-1, 3)
    else:
        elements = np.column_stack([a, b, c, d])
    return Mesh(domain, nodes, elements, kind)


def refine_uniform(m: Mesh) -> Mesh:
    """Split every element into four children through its edge midpoints."""
    k = m.elements.shape[1]
    le = _local_edges(k)
    E = m.elements[:, le]
    keys = np.sort(E.reshape(-1, 2), axis=1)
    uniq, inv = np.unique(keys, axis=0, return_inverse=True)
    N = m.nnodes
    mid = (N + inv.ravel()).reshape(-1, k)
    new_nodes = [m.nodes, 0.5 * (m.nodes[uniq[:, 0]] + m.nodes[uniq[:, 1]])]
    v = m.elements
    if k == 3:
        m01, m12, m20 = mid.T
        v0, v1, v2 = v.T
        children = [
            (v0, m01, m20), (m01, v1, m12), (m20, m12, v2), (m01, m12, m20),
        ]
    else:
        c = N + len(uniq) + np.arange(m.nelements)
        new_nodes.append(m.nodes[v].mean(axis=1))
        m01, m12, m23, m30 = mid.T
        v0, v1, v2, v3 = v.T
        children = [
            (v0, m01, c, m30), (m01, v1, m12, c), (c, m12, v2, m23), (m30, c, m23, v3),
        ]
    elements = np.stack([np.column_stack(ch) for ch in children], axis=1).reshape(-1, k)
    return Mesh(m.domain, np.vstack(new_nodes), elements, m.kind)


def uniform_sequence(domain: PolygonDomain, kind: str, levels: int, n0: int = 1):
    """Coarse mesh followed by ``levels - 1`` uniform refinements."""
    m = generate_initial(domain, kind, n0)
    out = [m]
    for _ in range(levels - 1):
        m = refine_uniform(m)
        out.append(m)
    return out


def write_mesh(m: Mesh, path):
    """Plain-text dump with ``nodes``, ``elements`` and ``boundary`` sections."""
    with open(path, "w") as fh:
        fh.write(f"# kind {m.kind} h {m.h:.16e}\n")
        fh.write(f"nodes {m.nnodes}\n")
        for i, (x, y) in enumerate(m.nodes):
            fh.write(f"{i} {x:.16e} {y:.16e}\n")
        fh.write(f"elements {m.nelements}\n")
        for i, el in enumerate(m.elements):
            fh.write(f"{i} " + " ".join(str(int(v)) for v in el) + "\n")
        fh.write(f"boundary {len(m.facet_nodes)}\n")
        for (a, b), g in zip(m.facet_nodes, m.facet_edge):
            fh.write(f"{int(a)} {int(b)} {int(g)}\n")
