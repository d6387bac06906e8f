"""Element-loop kernels for assembly, error integration and sparse products.

Each kernel exists twice: an explicit-loop version compiled with numba and a
vectorised numpy version. ``BACKEND`` (see :mod:`nitsche_fem._backend`)
selects which one the public names point to; both are importable for tests
and benchmarking through :func:`kernel_set`.

Array conventions
-----------------
coords : (nel, nloc, 2) element vertex coordinates, counter-clockwise
phi    : (nq, nloc) reference shape values at quadrature points
dphi   : (nq, nloc, 2) reference shape gradients at quadrature points
"""

from __future__ import annotations

from types import SimpleNamespace

import numpy as np

from ._backend import BACKEND, njit, prange

# ---------------------------------------------------------------------------
# numba


@njit(parallel=True)
def _volume_numba(coords, phi, dphi, weights, mu_q, f_q):
    nel, nloc = coords.shape[0], coords.shape[1]
    nq = weights.shape[0]
    K = np.zeros((nel, nloc, nloc))
    F = np.zeros((nel, nloc))
    detmin = np.empty(nel)
    for e in prange(nel):
        g = np.empty((nloc, 2))
        dmin = np.inf
        for q in range(nq):
            j00 = 0.0
            j01 = 0.0
            j10 = 0.0
            j11 = 0.0
            for a in range(nloc):
                j00 += coords[e, a, 0] * dphi[q, a, 0]
                j01 += coords[e, a, 0] * dphi[q, a, 1]
                j10 += coords[e, a, 1] * dphi[q, a, 0]
                j11 += coords[e, a, 1] * dphi[q, a, 1]
            det = j00 * j11 - j01 * j10
            if det < dmin:
                dmin = det
            for a in range(nloc):
                g[a, 0] = (j11 * dphi[q, a, 0] - j10 * dphi[q, a, 1]) / det
                g[a, 1] = (-j01 * dphi[q, a, 0] + j00 * dphi[q, a, 1]) / det
            wd = weights[q] * det
            mu = mu_q[e, q]
            for a in range(nloc):
                F[e, a] += wd * f_q[e, q] * phi[q, a]
                for b in range(nloc):
                    K[e, a, b] += wd * (g[a, 0] * g[b, 0] + g[a, 1] * g[b, 1]
                                        + mu * phi[q, a] * phi[q, b])
        detmin[e] = dmin
    return K, F, detmin


@njit(parallel=True)
def _facet_numba(coords, local_edge, phi_e, dphi_e, weights, normals, lengths,
                 ghat_q, penalty):
    nf, nloc = coords.shape[0], coords.shape[1]
    nq = weights.shape[0]
    K = np.zeros((nf, nloc, nloc))
    F = np.zeros((nf, nloc))
    for f in prange(nf):
        le = local_edge[f]
        nx = normals[f, 0]
        ny = normals[f, 1]
        # reference edge [-1, 1] has length 2
        ds = 0.5 * lengths[f]
        dn = np.empty(nloc)
        for q in range(nq):
            j00 = 0.0
            j01 = 0.0
            j10 = 0.0
            j11 = 0.0
            for a in range(nloc):
                j00 += coords[f, a, 0] * dphi_e[le, q, a, 0]
                j01 += coords[f, a, 0] * dphi_e[le, q, a, 1]
                j10 += coords[f, a, 1] * dphi_e[le, q, a, 0]
                j11 += coords[f, a, 1] * dphi_e[le, q, a, 1]
            det = j00 * j11 - j01 * j10
            for a in range(nloc):
                gx = (j11 * dphi_e[le, q, a, 0] - j10 * dphi_e[le, q, a, 1]) / det
                gy = (-j01 * dphi_e[le, q, a, 0] + j00 * dphi_e[le, q, a, 1]) / det
                dn[a] = gx * nx + gy * ny
            w = weights[q] * ds
            gq = ghat_q[f, q]
            for a in range(nloc):
                pa = phi_e[le, q, a]
                F[f, a] += w * (penalty * gq * pa - gq * dn[a])
                for b in range(nloc):
                    pb = phi_e[le, q, b]
                    K[f, a, b] += w * (penalty * pa * pb - pa * dn[b] - pb * dn[a])
    return K, F


@njit(parallel=True)
def _l2_numba(coords, coef, phi, dphi, weights, target_q):
    nel, nloc = coords.shape[0], coords.shape[1]
    nq = weights.shape[0]
    out = np.zeros(nel)
    for e in prange(nel):
        acc = 0.0
        for q in range(nq):
            j00 = 0.0
            j01 = 0.0
            j10 = 0.0
            j11 = 0.0
            uh = 0.0
            for a in range(nloc):
                j00 += coords[e, a, 0] * dphi[q, a, 0]
                j01 += coords[e, a, 0] * dphi[q, a, 1]
                j10 += coords[e, a, 1] * dphi[q, a, 0]
                j11 += coords[e, a, 1] * dphi[q, a, 1]
                uh += coef[e, a] * phi[q, a]
            d = target_q[e, q] - uh
            acc += weights[q] * (j00 * j11 - j01 * j10) * d * d
        out[e] = acc
    return out


@njit(parallel=True)
def _csr_matvec_numba(indptr, indices, data, x):
    n = indptr.shape[0] - 1
    y = np.empty(n)
    for r in prange(n):
        s = 0.0
        for k in range(indptr[r], indptr[r + 1]):
            s += data[k] * x[indices[k]]
        y[r] = s
    return y


# ---------------------------------------------------------------------------
# numpy


def _jacobians(coords, dphi):
    # J[e, q] = [[dx/dxi, dx/deta], [dy/dxi, dy/deta]]
    J = np.einsum("eai,qaj->eqij", coords, dphi)
    det = J[..., 0, 0] * J[..., 1, 1] - J[..., 0, 1] * J[..., 1, 0]
    return J, det


def _phys_grads(J, det, dphi):
    invT = np.empty_like(J)
    invT[..., 0, 0] = J[..., 1, 1]
    invT[..., 0, 1] = -J[..., 1, 0]
    invT[..., 1, 0] = -J[..., 0, 1]
    invT[..., 1, 1] = J[..., 0, 0]
    invT /= det[..., None, None]
    if dphi.ndim == 3:
        return np.einsum("eqij,qaj->eqai", invT, dphi)
    return np.einsum("eqij,eqaj->eqai", invT, dphi)


def _volume_numpy(coords, phi, dphi, weights, mu_q, f_q):
    J, det = _jacobians(coords, dphi)
    g = _phys_grads(J, det, dphi)
    wd = weights[None, :] * det
    K = np.einsum("eq,eqai,eqbi->eab", wd, g, g)
    K += np.einsum("eq,qa,qb->eab", wd * mu_q, phi, phi)
    F = np.einsum("eq,qa->ea", wd * f_q, phi)
    return K, F, det.min(axis=1)


def _facet_numpy(coords, local_edge, phi_e, dphi_e, weights, normals, lengths,
                 ghat_q, penalty):
    phi = phi_e[local_edge]          # (nf, nq, nloc)
    dphi = dphi_e[local_edge]        # (nf, nq, nloc, 2)
    J = np.einsum("fai,fqaj->fqij", coords, dphi)
    det = J[..., 0, 0] * J[..., 1, 1] - J[..., 0, 1] * J[..., 1, 0]
    g = _phys_grads(J, det, dphi)
    dn = np.einsum("fqai,fi->fqa", g, normals)
    w = weights[None, :] * (0.5 * lengths)[:, None]
    pen = np.einsum("fq,fqa,fqb->fab", w, phi, phi)
    cons = np.einsum("fq,fqa,fqb->fab", w, phi, dn)
    K = penalty * pen - cons - cons.transpose(0, 2, 1)
    F = np.einsum("fq,fqa->fa", w * ghat_q, penalty * phi - dn)
    return K, F


def _l2_numpy(coords, coef, phi, dphi, weights, target_q):
    _, det = _jacobians(coords, dphi)
    uh = coef @ phi.T
    d = target_q - uh
    return np.einsum("q,eq,eq->e", weights, det, d * d)


def _csr_matvec_numpy(indptr, indices, data, x):
    row = np.repeat(np.arange(len(indptr) - 1), np.diff(indptr))
    return np.bincount(row, weights=data * x[indices], minlength=len(indptr) - 1)


# ---------------------------------------------------------------------------

_SETS = {
    "numba": SimpleNamespace(
        volume=_volume_numba, facet=_facet_numba, l2=_l2_numba,
        csr_matvec=_csr_matvec_numba, name="numba"),
    "numpy": SimpleNamespace(
        volume=_volume_numpy, facet=_facet_numpy, l2=_l2_numpy,
        csr_matvec=_csr_matvec_numpy, name="numpy"),
}


def kernel_set(name: str | None = None) -> SimpleNamespace:
    return _SETS[name or BACKEND]


_active = kernel_set()
volume = _active.volume
facet = _active.facet
l2 = _active.l2
csr_matvec = _active.csr_matvec
