"""Nitsche assembly of the regularised problem into a sparse linear system.

The bilinear form is::

    a(w, v) = (grad w, grad v) + (mu w, v)
              - <v, grad w . n> - <w, grad v . n> + gamma/h <w, v>

and the load::

    l(v) = (f_hat, v) - <g_hat, grad v . n> + gamma/h <g_hat, v>

with ``<., .>`` the integral over the whole boundary and ``h`` the global
mesh size.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import kernels
from .boundary_data import RegularizedProblem
from .elements import reference_cell
from .mesh import Mesh
from .quadrature import gauss_edge

__all__ = [
    "AssemblyError",
    "SparseSystem",
    "VOLUME_DEGREE",
    "FACET_POINTS",
    "assemble",
    "local_load",
    "local_mass",
    "local_nitsche_facet",
    "local_stiffness",
    "write_system",
]

VOLUME_DEGREE = 4
FACET_POINTS = 4


class AssemblyError(ValueError):
    pass


@dataclass(frozen=True)
class SparseSystem:
    matrix: sp.csr_matrix
    rhs: np.ndarray
    gamma: float
    h: float

    @property
    def n(self) -> int:
        return self.matrix.shape[0]


def _as_field(fn):
    if callable(fn):
        return fn
    c = float(fn)
    return lambda p: np.full(np.asarray(p).shape[:-1], c)


def _map_points(phi, coords):
    # phi (nq, nloc), coords (nel, nloc, 2) -> (nel, nq, 2)
    return np.einsum("qa,eai->eqi", phi, coords)


def _eval_field(fn, pts):
    shape = pts.shape[:-1]
    return np.asarray(_as_field(fn)(pts.reshape(-1, 2)), dtype=float).reshape(shape)


def _check_cell(coords):
    coords = np.asarray(coords, dtype=float)
    kind = {3: "p1", 4: "q1"}.get(coords.shape[0])
    if kind is None or coords.shape[1] != 2:
        raise AssemblyError("cell must have 3 or 4 vertices in the plane")
    return coords, reference_cell(kind)


def _volume_local(coords, mu, f):
    coords, ref = _check_cell(coords)
    rule = ref.volume_rule(VOLUME_DEGREE)
    phi, dphi = ref.tabulate(rule)
    pts = _map_points(phi, coords[None])
    K, F, detmin = kernels.volume(coords[None], phi, dphi, rule.weights,
                                  _eval_field(mu, pts), _eval_field(f, pts))
    if detmin[0] <= 0:
        raise AssemblyError("degenerate or clockwise cell")
    return K[0], F[0]


def local_stiffness(coords) -> np.ndarray:
    """``int_K grad(phi_a) . grad(phi_b)`` for one cell."""
    return _volume_local(coords, 0.0, 0.0)[0]


def local_mass(coords, mu=1.0) -> np.ndarray:
    """``int_K mu phi_a phi_b`` for one cell; ``mu`` is a constant or a field."""
    coords, ref = _check_cell(coords)
    rule = ref.volume_rule(VOLUME_DEGREE)
    phi, dphi = ref.tabulate(rule)
    pts = _map_points(phi, coords[None])[0]
    _, det = kernels._jacobians(coords[None], dphi)
    w = rule.weights * det[0] * _eval_field(mu, pts)
    if np.min(det) <= 0:
        raise AssemblyError("degenerate or clockwise cell")
    return np.einsum("q,qa,qb->ab", w, phi, phi)


def _facet_geometry(coords, local_edge):
    k = coords.shape[0]
    a, b = coords[local_edge], coords[(local_edge + 1) % k]
    d = b - a
    L = float(np.hypot(*d))
    return np.array([d[1], -d[0]]) / L, L


def local_nitsche_facet(coords, local_edge: int, gamma: float, h: float) -> np.ndarray:
    """Boundary terms of the bilinear form for local edge ``local_edge`` of a cell.

    The consistency terms use the full gradient of the parent cell.
    """
    coords, ref = _check_cell(coords)
    if gamma <= 0 or h <= 0:
        raise AssemblyError("gamma and h must be positive")
    rule = gauss_edge(FACET_POINTS)
    phi_e, dphi_e = ref.tabulate_edges(rule)
    n, L = _facet_geometry(coords, local_edge)
    K, _ = kernels.facet(coords[None], np.array([local_edge]), phi_e, dphi_e, rule.weights,
                         n[None], np.array([L]), np.zeros((1, len(rule))), gamma / h)
    return K[0]


def local_load(coords, f_hat, local_edge=None, g_hat=None, gamma=None, h=None) -> np.ndarray:
    """Load vector of one cell, plus the boundary terms of ``local_edge`` if given.

    ``f_hat`` and ``g_hat`` are constants or callables of (n, 2) points.
    """
    coords, ref = _check_cell(coords)
    _, F = _volume_local(coords, 0.0, f_hat)
    if local_edge is None:
        return F
    rule = gauss_edge(FACET_POINTS)
    phi_e, dphi_e = ref.tabulate_edges(rule)
    n, L = _facet_geometry(coords, local_edge)
    pts = phi_e[local_edge] @ coords
    gq = _eval_field(g_hat if g_hat is not None else 0.0, pts)[None]
    _, Ff = kernels.facet(coords[None], np.array([local_edge]), phi_e, dphi_e, rule.weights,
                          n[None], np.array([L]), gq, gamma / h)
    return F + Ff[0]


def _scatter(n, conn, K, F):
    k = conn.shape[1]
    rows = np.repeat(conn, k, axis=1).ravel()
    cols = np.tile(conn, (1, k)).ravel()
    A = sp.coo_matrix((K.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    b = np.bincount(conn.ravel(), weights=F.ravel(), minlength=n)
    return A, b


def assemble(mesh: Mesh, problem: RegularizedProblem, gamma: float = 10.0,
             h: float | None = None) -> SparseSystem:
    """Global Nitsche system for ``problem`` on ``mesh``.

    Local contributions are scattered in element order, then facet order, so
    repeated calls give bitwise identical systems.
    """
    if gamma <= 0:
        raise AssemblyError("gamma must be positive")
    h = mesh.h if h is None else float(h)
    ref = reference_cell(mesh.kind)
    coords = mesh.coords

    rule = ref.volume_rule(VOLUME_DEGREE)
    phi, dphi = ref.tabulate(rule)
    pts = _map_points(phi, coords)
    K, F, detmin = kernels.volume(coords, phi, dphi, rule.weights,
                                  _eval_field(problem.mu, pts), _eval_field(problem.f_hat, pts))
    if np.any(detmin <= 0):
        bad = int(np.argmin(detmin))
        raise AssemblyError(f"element {bad} is degenerate or clockwise")

    erule = gauss_edge(FACET_POINTS)
    phi_e, dphi_e = ref.tabulate_edges(erule)
    fel = mesh.facet_element
    fle = mesh.facet_local_edge
    fcoords = coords[fel]
    fpts = np.einsum("fqa,fai->fqi", phi_e[fle], fcoords)
    ghat_q = np.empty(fpts.shape[:2])
    if np.any(mesh.facet_edge < 0) or np.any(mesh.facet_edge >= problem.domain.M):
        raise AssemblyError("boundary facet without a valid edge tag")
    for i in np.unique(mesh.facet_edge):
        sel = mesh.facet_edge == i
        ghat_q[sel] = problem.g_hat_at(int(i), fpts[sel].reshape(-1, 2)).reshape(-1, len(erule))
    Kf, Ff = kernels.facet(fcoords, fle, phi_e, dphi_e, erule.weights, mesh.facet_normal,
                           mesh.facet_lengths(), ghat_q, gamma / h)

    k = mesh.elements.shape[1]
    conn = np.vstack([mesh.elements, mesh.elements[fel]])
    Kall = np.concatenate([K, Kf])
    Kall = 0.5 * (Kall + Kall.transpose(0, 2, 1))
    Fall = np.concatenate([F, Ff])
    A, b = _scatter(mesh.nnodes, conn.reshape(-1, k), Kall, Fall)
    A.eliminate_zeros()
    A.sort_indices()
    return SparseSystem(A, b, float(gamma), h)


def write_system(system: SparseSystem, matrix_path, rhs_path):
    """Text dump: ``row col value`` triplets and ``index value`` for the rhs."""
    A = system.matrix.tocoo()
    order = np.lexsort((A.col, A.row))
    with open(matrix_path, "w") as fh:
        fh.write(f"% {A.shape[0]} {A.shape[1]} {A.nnz}\n")
        for r, c, v in zip(A.row[order], A.col[order], A.data[order]):
            fh.write(f"{r} {c} {v:.16e}\n")
    with open(rhs_path, "w") as fh:
        for i, v in enumerate(system.rhs):
            fh.write(f"{i} {v:.16e}\n")
