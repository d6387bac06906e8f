"""Piecewise smooth Dirichlet data, singular functions and regularised data.

The Dirichlet data ``g`` is given edge by edge on the boundary partition of a
:class:`~nitsche_fem.geometry.PolygonDomain`. At every declared discontinuity
point ``A_i`` a harmonic singular function ``Theta_i`` reproduces the jump of
``g`` (and, at straight angles, the jump of its tangential derivative), so
that ``g_hat = g - sum(Theta_i)`` is continuous along the boundary and the
problem for ``u_hat = u - sum(Theta_i)`` has ``H^2`` regularity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .geometry import PolarFrame, PolygonDomain

__all__ = [
    "BoundaryData",
    "BoundaryDataError",
    "EdgeTrace",
    "JumpRecord",
    "RegularizedProblem",
    "SingularFunction",
    "build_singular_functions",
    "eval_singular",
    "one_sided_limits",
    "regularize",
    "regularize_f",
    "regularize_g",
    "sigma",
]

R_FLOOR = 1e-300
# quadrature points must stay this far from any discontinuity point
MIN_EVAL_DISTANCE = 1e-14


class BoundaryDataError(ValueError):
    pass


@dataclass(frozen=True)
class EdgeTrace:
    """Data on one straight edge as functions of arc length ``s in [0, length]``.

    ``derivative`` is the tangential derivative in counter-clockwise
    direction. Both callables must accept numpy arrays and be finite and
    continuous on the closed edge, endpoints included (use one-sided limits
    there).
    """

    value: Callable[[np.ndarray], np.ndarray]
    derivative: Callable[[np.ndarray], np.ndarray]
    length: float

    def __call__(self, s):
        return self.value(np.asarray(s, dtype=float))


@dataclass(frozen=True)
class JumpRecord:
    index: int
    g_plus: float
    g_minus: float
    jump_g: float
    gprime_plus: float
    gprime_minus: float
    jump_gprime: float


def one_sided_limits(traces: Sequence[EdgeTrace], i: int) -> JumpRecord:
    """Limits at ``A_i`` from the leaving edge (+) and the arriving edge (-)."""
    M = len(traces)
    nxt, prv = traces[i % M], traces[(i - 1) % M]
    gp = float(nxt.value(np.array([0.0]))[0])
    gm = float(prv.value(np.array([prv.length]))[0])
    dp = float(nxt.derivative(np.array([0.0]))[0])
    dm = float(prv.derivative(np.array([prv.length]))[0])
    return JumpRecord(i % M, gp, gm, gp - gm, dp, dm, dp - dm)


def sigma(r, theta):
    """``r (ln r sin(theta) + theta cos(theta))``, extended by 0 at ``r = 0``."""
    r = np.asarray(r, dtype=float)
    theta = np.asarray(theta, dtype=float)
    rr = np.maximum(r, R_FLOOR)
    out = rr * (np.log(rr) * np.sin(theta) + theta * np.cos(theta))
    return np.where(r == 0.0, 0.0, out)


def _sigma_grad_polar(r, theta):
    lr = np.log(np.maximum(r, R_FLOOR))
    s, c = np.sin(theta), np.cos(theta)
    d_r = lr * s + s + theta * c
    d_t = r * (lr * c + c - theta * s)
    return d_r, d_t


@dataclass(frozen=True)
class SingularFunction:
    """Harmonic function carrying the data jump at one boundary point."""

    frame: PolarFrame
    omega: float
    g_plus: float
    jump_g: float
    jump_gprime: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.omega <= math.pi:
            raise BoundaryDataError(f"interior angle {self.omega} outside (0, pi]")

    @property
    def straight(self) -> bool:
        return self.omega == math.pi

    def polar_value(self, r, theta):
        r = np.asarray(r, dtype=float)
        theta = np.asarray(theta, dtype=float)
        if self.straight:
            return self.g_plus - (theta * self.jump_g + sigma(r, theta) * self.jump_gprime) / math.pi
        return self.g_plus - theta / self.omega * self.jump_g

    def __call__(self, points):
        r, t = self.frame.polar(points)
        if np.any(r < MIN_EVAL_DISTANCE):
            raise BoundaryDataError(
                f"singular function evaluated at its centre {tuple(self.frame.origin)}")
        return self.polar_value(r, t)

    def gradient(self, points):
        """Cartesian gradient, shape ``(..., 2)``."""
        p = np.asarray(points, dtype=float)
        r, t = self.frame.polar(p)
        if np.any(r < MIN_EVAL_DISTANCE):
            raise BoundaryDataError("gradient requested at the singular point")
        d = p - self.frame.origin
        grad_r = d / r[..., None]
        grad_t = np.stack([-d[..., 1], d[..., 0]], axis=-1) / (r * r)[..., None]
        if self.straight:
            s_r, s_t = _sigma_grad_polar(r, t)
            c_r = -s_r * self.jump_gprime / math.pi
            c_t = -(self.jump_g + s_t * self.jump_gprime) / math.pi
        else:
            c_r = np.zeros_like(r)
            c_t = np.full_like(r, -self.jump_g / self.omega)
        return c_r[..., None] * grad_r + c_t[..., None] * grad_t


def eval_singular(s: SingularFunction, p) -> float | np.ndarray:
    out = s(p)
    return float(out) if np.ndim(out) == 0 else out


class BoundaryData:
    """Dirichlet data ``g`` given by one :class:`EdgeTrace` per partition edge."""

    def __init__(self, domain: PolygonDomain, traces: Sequence[EdgeTrace],
                 validate: bool = True, jump_tol: float = 1e-12):
        if len(traces) != domain.M:
            raise BoundaryDataError(
                f"expected {domain.M} edge traces, got {len(traces)}")
        self.domain = domain
        self.traces = tuple(traces)
        for i, tr in enumerate(self.traces):
            if abs(tr.length - domain.edge_length(i)) > 1e-12 * domain.diameter:
                raise BoundaryDataError(f"trace {i} length does not match edge length")
        if validate:
            self.validate(jump_tol)

    def jumps(self) -> list[JumpRecord]:
        return [one_sided_limits(self.traces, i) for i in range(self.domain.M)]

    def validate(self, jump_tol: float = 1e-12, fd_rtol: float = 1e-5):
        """Check traces for finiteness, undeclared jumps and derivative orientation."""
        for i, tr in enumerate(self.traces):
            L = tr.length
            s = np.linspace(0.0, L, 11)
            v, dv = tr.value(s), tr.derivative(s)
            if not (np.all(np.isfinite(v)) and np.all(np.isfinite(dv))):
                raise BoundaryDataError(f"edge trace {i} is not finite on the closed edge")
            # centred differences at interior points
            si = np.linspace(0.1 * L, 0.9 * L, 5)
            eps = 1e-6 * L
            fd = (tr.value(si + eps) - tr.value(si - eps)) / (2 * eps)
            ref = tr.derivative(si)
            scale = max(1.0, float(np.max(np.abs(ref))))
            if np.max(np.abs(fd - ref)) > fd_rtol * scale:
                raise BoundaryDataError(
                    f"edge trace {i}: derivative disagrees with finite differences "
                    "(expected counter-clockwise tangential derivative)")
        declared = set(self.domain.singular_indices)
        for rec in self.jumps():
            if rec.index not in declared and abs(rec.jump_g) > jump_tol:
                raise BoundaryDataError(
                    f"data jumps by {rec.jump_g:g} at undeclared point "
                    f"{tuple(self.domain.points[rec.index])}")

    def trace_at(self, edge_index, points):
        """Evaluate ``g`` at points known to lie on edge ``edge_index``."""
        a, _ = self.domain.edge(edge_index)
        s = np.hypot(*(np.asarray(points, dtype=float) - a).T)
        return self.traces[edge_index].value(s)


def build_singular_functions(data: BoundaryData) -> list[SingularFunction]:
    """One singular function per declared discontinuity point."""
    out = []
    dom = data.domain
    for i in dom.singular_indices:
        rec = one_sided_limits(data.traces, i)
        omega = float(dom.angles[i])
        out.append(SingularFunction(dom.frame(i), omega, rec.g_plus, rec.jump_g,
                                    rec.jump_gprime if omega == math.pi else 0.0))
    return out


def _singular_sum(singulars, points):
    p = np.asarray(points, dtype=float)
    total = np.zeros(p.shape[:-1])
    for s in singulars:
        total = total + s(p)
    return total


def _singular_sum_on_edge(singulars, domain, edge_index, s):
    """Sum of singular functions and of their tangential derivatives along an
    edge, using one-sided limits at the edge endpoints."""
    a, b = domain.edge(edge_index)
    tau = domain.tangent(edge_index)
    s = np.asarray(s, dtype=float)
    p = a + s[..., None] * tau
    val = np.zeros(s.shape)
    der = np.zeros(s.shape)
    for sf in singulars:
        r, t = sf.frame.polar(p)
        at_centre = r < MIN_EVAL_DISTANCE
        arriving = bool(np.allclose(sf.frame.origin, b))
        if arriving:
            # the frame angle on the arriving edge is omega, also as r -> 0
            t = np.where(at_centre, sf.omega, t)
        val = val + sf.polar_value(r, t)
        d = np.zeros(s.shape)
        far = ~at_centre
        if np.any(far):
            d[far] = sf.gradient(p[far]) @ tau
        if np.any(at_centre) and arriving and sf.straight:
            # Theta = g(A-) + r [g'] on the arriving side, and s runs against r
            d[at_centre] = -sf.jump_gprime
        der = der + d
    return val, der


def regularize_g(data: BoundaryData, singulars: Sequence[SingularFunction]) -> list[EdgeTrace]:
    """Edge traces of ``g_hat = g - sum(Theta_i)``."""
    out = []
    for i, tr in enumerate(data.traces):
        def value(s, i=i, tr=tr):
            return tr.value(s) - _singular_sum_on_edge(singulars, data.domain, i, s)[0]

        def derivative(s, i=i, tr=tr):
            return tr.derivative(s) - _singular_sum_on_edge(singulars, data.domain, i, s)[1]

        out.append(EdgeTrace(value, derivative, tr.length))
    return out


def regularize_f(f, mu, singulars: Sequence[SingularFunction]):
    """``f_hat = f - mu * sum(Theta_i)`` as a vectorised callable of points."""
    singulars = tuple(singulars)
    if not singulars:
        return f

    def f_hat(points):
        return f(points) - mu(points) * _singular_sum(singulars, points)

    return f_hat


@dataclass(frozen=True)
class RegularizedProblem:
    """Data of the ``H^2``-regular auxiliary problem.

    ``f_hat`` and ``mu`` map an (n, 2) array of points to values; ``g_hat``
    holds one :class:`EdgeTrace` per partition edge of ``domain``.
    """

    domain: PolygonDomain
    g_hat: tuple
    f_hat: Callable
    mu: Callable
    singular_parts: tuple

    def g_hat_at(self, edge_index, points):
        a, _ = self.domain.edge(edge_index)
        s = np.hypot(*(np.asarray(points, dtype=float) - a).T)
        return self.g_hat[edge_index].value(s)

    def singular_sum(self, points):
        return _singular_sum(self.singular_parts, points)


def regularize(data: BoundaryData, f, mu) -> RegularizedProblem:
    singulars = build_singular_functions(data)
    return RegularizedProblem(
        data.domain,
        tuple(regularize_g(data, singulars)),
        regularize_f(f, mu, singulars),
        mu,
        tuple(singulars),
    )
