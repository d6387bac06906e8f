"""Registry of manufactured test problems ``-lap(u) + mu u = f``, ``u = g``."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .boundary_data import BoundaryData, EdgeTrace, RegularizedProblem, regularize
from .geometry import PolygonDomain, rectangle

__all__ = ["ManufacturedCase", "CaseError", "get_case", "register", "registered_cases"]


class CaseError(KeyError):
    pass


@dataclass(frozen=True, eq=False)
class ManufacturedCase:
    """A problem with known solution.

    ``exact``, ``f`` and ``mu`` are vectorised callables of (n, 2) points;
    ``exact`` need not be defined at the discontinuity points. ``traces``
    holds one :class:`EdgeTrace` per partition edge. ``exact_regular`` is an
    optional closed form of ``u - sum(Theta_i)``.
    """

    name: str
    domain: PolygonDomain
    exact: Callable
    f: Callable
    mu: Callable
    traces: tuple
    exact_regular: Callable | None = None
    n0: int = 1
    description: str = ""

    def boundary_data(self) -> BoundaryData:
        return BoundaryData(self.domain, self.traces)

    def regularized(self) -> RegularizedProblem:
        return regularize(self.boundary_data(), self.f, self.mu)


_REGISTRY: dict[str, ManufacturedCase] = {}


def _fd_residual(case: ManufacturedCase, npts=20, step=1e-3, seed=0):
    """Max of ``|-lap(u) + mu u - f|`` by the 5-point stencil at random points."""
    rng = np.random.default_rng(seed)
    V = case.domain.vertices
    lo, hi = V.min(axis=0), V.max(axis=0)
    pts = []
    while len(pts) < npts:
        p = lo + rng.random(2) * (hi - lo)
        if not case.domain.contains(p[None], tol=0.0)[0]:
            continue
        # keep the stencil inside and away from the data discontinuities
        if np.any(np.hypot(*(case.domain.points - p).T) < 0.1):
            continue
        lo_d = min(abs((b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]))
                   / np.hypot(*(b - a)) for a, b in zip(V, np.roll(V, -1, axis=0)))
        if lo_d < 2 * step:
            continue
        pts.append(p)
    p = np.array(pts)
    ex, ey = np.array([step, 0.0]), np.array([0.0, step])
    u = case.exact
    lap = (u(p + ex) + u(p - ex) + u(p + ey) + u(p - ey) - 4 * u(p)) / step**2
    res = -lap + case.mu(p) * u(p) - case.f(p)
    return float(np.max(np.abs(res))), float(np.max(np.abs(case.f(p))))


def register(case: ManufacturedCase, rtol: float = 1e-4) -> ManufacturedCase:
    """Add ``case`` to the registry after checking the PDE by finite differences."""
    res, scale = _fd_residual(case)
    if res > rtol * max(1.0, scale):
        raise ValueError(f"case {case.name!r}: exact solution violates the PDE (residual {res:.2e})")
    _REGISTRY[case.name] = case
    return case


def registered_cases() -> list[str]:
    return sorted(_REGISTRY)


def get_case(name: str) -> ManufacturedCase:
    try:
        return _REGISTRY[name]
    except KeyError:
        raise CaseError(
            f"unknown case {name!r}; registered cases: {', '.join(registered_cases())}") from None


def _smooth_traces(domain, u, grad_u):
    out = []
    for i in range(domain.M):
        a, _ = domain.edge(i)
        tau = domain.tangent(i)

        def value(s, a=a, tau=tau):
            s = np.asarray(s, dtype=float)
            return u(a + s[..., None] * tau)

        def derivative(s, a=a, tau=tau):
            s = np.asarray(s, dtype=float)
            return grad_u(a + s[..., None] * tau) @ tau

        out.append(EdgeTrace(value, derivative, domain.edge_length(i)))
    return tuple(out)


def _const(c):
    return lambda p: np.full(np.asarray(p).shape[:-1], float(c))


# -- boundary layer at the origin: u = exp(-r^2) * theta on (-1,1) x (0,1) ----

def _angle(p):
    # the domain lies in y >= 0; abs() keeps signed zeros from flipping pi to -pi
    return np.arctan2(np.abs(p[..., 1]), p[..., 0])


def _jump_u(p):
    p = np.asarray(p, dtype=float)
    return np.exp(-np.sum(p * p, axis=-1)) * _angle(p)


def _jump_grad(p):
    p = np.asarray(p, dtype=float)
    r2 = np.sum(p * p, axis=-1)
    e = np.exp(-r2)
    safe = np.where(r2 > 0, r2, 1.0)
    rot = np.stack([-p[..., 1], p[..., 0]], axis=-1) / safe[..., None]
    rot = np.where((r2 > 0)[..., None], rot, 0.0)
    return e[..., None] * (-2 * _angle(p)[..., None] * p + rot)


def _jump_f(p):
    p = np.asarray(p, dtype=float)
    r2 = np.sum(p * p, axis=-1)
    return np.exp(-r2) * (5 - 4 * r2) * _angle(p)


def _jump_traces(domain):
    out = []
    for i in range(domain.M):
        a, b = domain.edge(i)
        tau = domain.tangent(i)
        # angle of the approach direction if the edge touches the origin
        start_angle = math.atan2(abs(tau[1]), tau[0])
        end_angle = math.atan2(abs(tau[1]), -tau[0])

        def theta(s, a=a, tau=tau, sa=start_angle, ea=end_angle):
            p = a + np.asarray(s, dtype=float)[..., None] * tau
            r2 = np.sum(p * p, axis=-1)
            t = _angle(p)
            t = np.where((r2 == 0) & (np.asarray(s) == 0), sa, t)
            t = np.where((r2 == 0) & (np.asarray(s) > 0), ea, t)
            return p, r2, t

        def value(s, theta=theta):
            p, r2, t = theta(s)
            return np.exp(-r2) * t

        def derivative(s, theta=theta, tau=tau):
            p, r2, _ = theta(s)
            # both one-sided limits at the origin vanish along the x-axis
            return np.where(r2 == 0, 0.0, _jump_grad(p) @ tau)

        out.append(EdgeTrace(value, derivative, domain.edge_length(i)))
    return tuple(out)


def _jump_case():
    dom = rectangle(-1.0, 1.0, 0.0, 1.0, [(0.0, 0.0)])
    return ManufacturedCase(
        name="paper-3-3",
        domain=dom,
        exact=_jump_u,
        f=_jump_f,
        mu=_const(1.0),
        traces=_jump_traces(dom),
        exact_regular=lambda p: (np.exp(-np.sum(np.asarray(p) ** 2, axis=-1)) - 1.0) * _angle(np.asarray(p)),
        description="u = exp(-r^2) theta on (-1,1)x(0,1), data jump of -pi at the origin",
    )


def _sine_u(p):
    p = np.asarray(p, dtype=float)
    return np.sin(np.pi * p[..., 0]) * np.sin(np.pi * p[..., 1])


def _sine_grad(p):
    p = np.asarray(p, dtype=float)
    x, y = np.pi * p[..., 0], np.pi * p[..., 1]
    return np.pi * np.stack([np.cos(x) * np.sin(y), np.sin(x) * np.cos(y)], axis=-1)


def _sine_case():
    dom = rectangle(-1.0, 1.0, 0.0, 1.0)
    return ManufacturedCase(
        name="smooth-sine",
        domain=dom,
        exact=_sine_u,
        f=lambda p: (2 * np.pi**2 + 1) * _sine_u(p),
        mu=_const(1.0),
        traces=_smooth_traces(dom, _sine_u, _sine_grad),
        exact_regular=_sine_u,
        # a 2x1 coarse grid cannot represent one full period of the sine
        n0=2,
        description="u = sin(pi x) sin(pi y) on (-1,1)x(0,1), homogeneous data",
    )


def _linear_case():
    dom = rectangle(-1.0, 1.0, 0.0, 1.0)

    def u(p):
        p = np.asarray(p, dtype=float)
        return p[..., 0] + p[..., 1]

    def grad(p):
        return np.broadcast_to(np.array([1.0, 1.0]), np.asarray(p).shape).copy()

    return ManufacturedCase(
        name="linear-patch",
        domain=dom,
        exact=u,
        f=_const(0.0),
        mu=_const(0.0),
        traces=_smooth_traces(dom, u, grad),
        exact_regular=u,
        description="u = x + y on (-1,1)x(0,1), mu = 0, f = 0",
    )


for _make in (_jump_case, _sine_case, _linear_case):
    register(_make())
