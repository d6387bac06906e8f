"""Discrete solutions, L2 errors and convergence studies."""

from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .assembly import SparseSystem, assemble
from .boundary_data import BoundaryDataError
from .elements import P1, reference_cell
from .mesh import Mesh, uniform_sequence
from .solver import DEFAULT_TOL, SolveReport, solve_spd

__all__ = [
    "ConvergenceRecord",
    "ConvergenceTable",
    "DiscreteSolution",
    "EvaluationError",
    "LevelResult",
    "PointLocator",
    "StudyError",
    "ERROR_DEGREE",
    "eoc",
    "eval_fe",
    "eval_full",
    "l2_error",
    "run_convergence_study",
    "solve_level",
]

logger = logging.getLogger(__name__)

ERROR_DEGREE = 7
INSIDE_TOL = 1e-12


class EvaluationError(ValueError):
    pass


class PointLocator:
    """Element lookup through an axis-aligned bin grid with a linear-scan fallback."""

    def __init__(self, mesh: Mesh, bins: int | None = None):
        self.mesh = mesh
        c = mesh.coords
        lo, hi = c.min(axis=1), c.max(axis=1)
        self.lo = mesh.nodes.min(axis=0)
        self.hi = mesh.nodes.max(axis=0)
        nb = bins or max(1, int(math.sqrt(mesh.nelements)))
        self.nb = nb
        self.size = (self.hi - self.lo) / nb
        i0 = self._bin(lo)
        i1 = self._bin(hi)
        self.table: dict[tuple, list] = {}
        for e in range(mesh.nelements):
            for bx in range(i0[e, 0], i1[e, 0] + 1):
                for by in range(i0[e, 1], i1[e, 1] + 1):
                    self.table.setdefault((bx, by), []).append(e)

    def _bin(self, p):
        b = np.floor((np.asarray(p) - self.lo) / self.size).astype(int)
        return np.clip(b, 0, self.nb - 1)

    def _local(self, e, p):
        """Reference coordinates of ``p`` in element ``e`` and an inside flag."""
        ref = self.mesh.reference
        X = self.mesh.coords[e]
        if ref.kind == P1:
            J = np.column_stack([X[1] - X[0], X[2] - X[0]]) / 2
            xi = np.linalg.solve(J, p - X[0]) - 1.0
            lam = ref.shape(xi[None])[0]
            return xi, bool(np.all(lam >= -INSIDE_TOL))
        xi = np.zeros(2)
        for _ in range(30):
            r = ref.shape(xi[None])[0] @ X - p
            J = X.T @ ref.grad(xi[None])[0]
            step = np.linalg.solve(J, r)
            xi = xi - step
            if np.max(np.abs(step)) < 1e-15:
                break
        return xi, bool(np.all(np.abs(xi) <= 1 + INSIDE_TOL))

    def locate(self, p):
        p = np.asarray(p, dtype=float)
        b = tuple(self._bin(p))
        for e in self.table.get(b, ()):
            xi, inside = self._local(e, p)
            if inside:
                return e, xi
        for e in range(self.mesh.nelements):
            xi, inside = self._local(e, p)
            if inside:
                return e, xi
        raise EvaluationError(f"point {tuple(p)} lies outside the mesh")


@dataclass(eq=False)
class DiscreteSolution:
    """``u_h = u_hat_h + sum(Theta_i)`` with ``u_hat_h`` given by nodal values."""

    mesh: Mesh
    coefficients: np.ndarray
    singular_parts: tuple = ()
    _locator: PointLocator | None = field(default=None, repr=False)

    def __post_init__(self):
        self.coefficients = np.asarray(self.coefficients, dtype=float)
        if self.coefficients.shape != (self.mesh.nnodes,):
            raise ValueError("one coefficient per mesh node expected")
        self.singular_parts = tuple(self.singular_parts)

    @property
    def locator(self) -> PointLocator:
        if self._locator is None:
            self._locator = PointLocator(self.mesh)
        return self._locator

    def eval_fe(self, points):
        p = np.atleast_2d(np.asarray(points, dtype=float))
        ref = self.mesh.reference
        out = np.empty(len(p))
        for k, q in enumerate(p):
            e, xi = self.locator.locate(q)
            out[k] = ref.shape(xi[None])[0] @ self.coefficients[self.mesh.elements[e]]
        return out

    def singular_sum(self, points):
        p = np.atleast_2d(np.asarray(points, dtype=float))
        total = np.zeros(len(p))
        for s in self.singular_parts:
            try:
                total += s(p)
            except BoundaryDataError as exc:
                raise EvaluationError(str(exc)) from None
        return total

    def eval_full(self, points):
        return self.eval_fe(points) + self.singular_sum(points)


def eval_fe(sol: DiscreteSolution, p):
    v = sol.eval_fe(p)
    return float(v[0]) if np.ndim(p) == 1 else v


def eval_full(sol: DiscreteSolution, p):
    v = sol.eval_full(p)
    return float(v[0]) if np.ndim(p) == 1 else v


def _error_rule(mesh):
    ref = reference_cell(mesh.kind)
    return ref, ref.volume_rule(ERROR_DEGREE)


def quadrature_points(mesh: Mesh, degree: int = ERROR_DEGREE):
    ref = reference_cell(mesh.kind)
    rule = ref.volume_rule(degree)
    phi, _ = ref.tabulate(rule)
    return np.einsum("qa,eai->eqi", phi, mesh.coords)


def l2_error(sol: DiscreteSolution, exact, include_singular: bool = True) -> float:
    """``||exact - u_h||`` over the mesh with the high-order error rule.

    With ``include_singular=False`` the singular parts are ignored, so the
    result is ``||exact - u_hat_h||``.
    """
    mesh = sol.mesh
    ref, rule = _error_rule(mesh)
    phi, dphi = ref.tabulate(rule)
    pts = np.einsum("qa,eai->eqi", phi, mesh.coords)
    flat = pts.reshape(-1, 2)
    target = np.asarray(exact(flat), dtype=float)
    if include_singular and sol.singular_parts:
        target = target - sol.singular_sum(flat)
    target = target.reshape(pts.shape[:2])
    per_el = kernels.l2(mesh.coords, sol.coefficients[mesh.elements], phi, dphi,
                        rule.weights, target)
    return float(math.sqrt(np.sum(per_el)))


@dataclass
class ConvergenceRecord:
    level: int
    h: float
    elements: int
    dofs: int
    l2_error: float
    eoc: float | None = None


def eoc(records):
    """Fill in the observed order ``log(e_prev / e) / log(h_prev / h)``.

    The first record has no rate; a vanishing error makes the rate
    undefined (``nan``).
    """
    records = list(records)
    if len(records) < 2:
        raise ValueError("at least two records are needed for a rate")
    records[0].eoc = None
    for prev, cur in zip(records, records[1:]):
        if not cur.h < prev.h:
            raise ValueError("mesh sizes must decrease strictly")
        if prev.l2_error <= 0 or cur.l2_error <= 0:
            cur.eoc = math.nan
        else:
            cur.eoc = math.log(prev.l2_error / cur.l2_error) / math.log(prev.h / cur.h)
    return records


CSV_HEADER = ("level", "h", "elements", "dofs", "l2_error", "eoc")


def _fmt(x):
    return f"{x:.15e}"


@dataclass
class ConvergenceTable:
    records: list
    case: str = ""
    kind: str = P1
    gamma: float = 10.0

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    @property
    def final_eoc(self):
        return self.records[-1].eoc if self.records else None

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in self.records:
            rate = "" if r.eoc is None else ("nan" if math.isnan(r.eoc) else _fmt(r.eoc))
            w.writerow([r.level, _fmt(r.h), r.elements, r.dofs, _fmt(r.l2_error), rate])
        return buf.getvalue()

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            fh.write(self.to_csv())


@dataclass(eq=False)
class LevelResult:
    mesh: Mesh
    system: SparseSystem
    report: SolveReport
    solution: DiscreteSolution
    l2_error: float


class StudyError(RuntimeError):
    def __init__(self, message, table, levels=()):
        super().__init__(message)
        self.table = table
        self.levels = list(levels)


def solve_level(case, mesh: Mesh, gamma: float = 10.0, tol: float = DEFAULT_TOL,
                problem=None) -> LevelResult:
    """Regularise, assemble, solve and measure the error on one mesh."""
    problem = case.regularized() if problem is None else problem
    system = assemble(mesh, problem, gamma)
    report = solve_spd(system, tol)
    sol = DiscreteSolution(mesh, report.solution, problem.singular_parts)
    err = l2_error(sol, case.exact)
    return LevelResult(mesh, system, report, sol, err)


def run_convergence_study(case, kind: str = P1, levels: int = 5, gamma: float = 10.0,
                          tol: float = DEFAULT_TOL, keep_levels: bool = False):
    """Error table over ``levels`` uniformly refined meshes.

    Returns the :class:`ConvergenceTable`, or ``(table, level_results)`` when
    ``keep_levels`` is set. A failing level raises :class:`StudyError`
    carrying the table of the completed levels.
    """
    if levels < 1:
        raise ValueError("levels must be >= 1")
    problem = case.regularized()
    table = ConvergenceTable([], case.name, kind, gamma)
    results = []
    for lvl, mesh in enumerate(uniform_sequence(case.domain, kind, levels, case.n0), start=1):
        try:
            res = solve_level(case, mesh, gamma, tol, problem)
        except Exception as exc:
            raise StudyError(f"level {lvl} failed: {exc}", table, results) from exc
        logger.info("level %d: h=%.4g elements=%d error=%.6e iterations=%d",
                    lvl, mesh.h, mesh.nelements, res.l2_error, res.report.iterations)
        table.records.append(ConvergenceRecord(lvl, mesh.h, mesh.nelements, mesh.nnodes,
                                               res.l2_error))
        if len(table.records) >= 2:
            eoc(table.records)
        if keep_levels:
            results.append(res)
    return (table, results) if keep_levels else table
