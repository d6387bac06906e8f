"""Command line interface: ``nitsche-fem solve`` and ``nitsche-fem cases``."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import asdict, dataclass, fields

import numpy as np

from . import cases as case_registry
from ._backend import BACKEND, configure_threads
from .analysis import StudyError, run_convergence_study
from .assembly import write_system
from .mesh import write_mesh
from .plotting import emit_plot

__all__ = ["RunConfig", "main", "sample_solution"]

logger = logging.getLogger("nitsche_fem")


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    case: str = "paper-3-3"
    element: str = "p1"
    levels: int = 5
    gamma: float = 10.0
    tol: float = 1e-10
    output: str = "out"
    dump_mesh: bool = False
    dump_system: bool = False
    dump_solution: bool = False
    plot: bool = False

    def validate(self):
        if self.case not in case_registry.registered_cases():
            raise ConfigError(
                f"unknown case {self.case!r}; registered cases: "
                + ", ".join(case_registry.registered_cases()))
        if self.element not in ("p1", "q1"):
            raise ConfigError("element must be 'p1' or 'q1'")
        if int(self.levels) < 1:
            raise ConfigError("levels must be >= 1")
        if not float(self.gamma) > 0:
            raise ConfigError("gamma must be positive")
        if not 0 < float(self.tol) < 1:
            raise ConfigError("tol must lie in (0, 1)")
        return self

    @classmethod
    def from_sources(cls, config_path=None, overrides=None) -> "RunConfig":
        """Defaults, then the JSON file, then explicitly given flags."""
        data = {}
        names = {f.name for f in fields(cls)}
        if config_path:
            with open(config_path) as fh:
                raw = json.load(fh)
            if not isinstance(raw, dict):
                raise ConfigError("configuration file must hold a JSON object")
            unknown = set(k.replace("-", "_") for k in raw) - names
            if unknown:
                raise ConfigError(f"unknown configuration keys: {sorted(unknown)}")
            data.update({k.replace("-", "_"): v for k, v in raw.items()})
        for k, v in (overrides or {}).items():
            if v is not None:
                data[k] = v
        cfg = cls(**data)
        cfg.levels = int(cfg.levels)
        cfg.gamma = float(cfg.gamma)
        cfg.tol = float(cfg.tol)
        return cfg.validate()


def sample_solution(solution, per_unit: int = 32):
    """Values of ``u_h`` and ``u_hat_h`` at cell centres of a uniform grid.

    Cell centres never coincide with boundary discontinuity points.
    """
    V = solution.mesh.domain.vertices
    lo, hi = V.min(axis=0), V.max(axis=0)
    nx, ny = (np.maximum(1, np.round((hi - lo) * per_unit)).astype(int))
    xs = lo[0] + (np.arange(nx) + 0.5) * (hi[0] - lo[0]) / nx
    ys = lo[1] + (np.arange(ny) + 0.5) * (hi[1] - lo[1]) / ny
    Y, X = np.meshgrid(ys, xs, indexing="ij")
    pts = np.column_stack([X.ravel(), Y.ravel()])
    pts = pts[solution.mesh.domain.contains(pts)]
    u_hat = solution.eval_fe(pts)
    return pts, u_hat + solution.singular_sum(pts), u_hat


def _write_solution(path, pts, uh, uhat):
    with open(path, "w") as fh:
        fh.write("x,y,u_h,u_hat_h\n")
        for (x, y), a, b in zip(pts, uh, uhat):
            fh.write(f"{x:.15e},{y:.15e},{a:.15e},{b:.15e}\n")


def _parser():
    p = argparse.ArgumentParser(
        prog="nitsche-fem",
        description="Nitsche finite elements for diffusion-reaction problems "
                    "with discontinuous Dirichlet data.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="run a convergence study for a registered case")
    s.add_argument("--config", help="JSON file with run settings (flags override it)")
    s.add_argument("--case", help="registered case name (default paper-3-3)")
    s.add_argument("--element", choices=("p1", "q1"), help="element kind (default p1)")
    s.add_argument("--levels", type=int, help="number of meshes in the study (default 5)")
    s.add_argument("--gamma", type=float, help="Nitsche penalty parameter (default 10)")
    s.add_argument("--tol", type=float, help="CG relative residual tolerance (default 1e-10)")
    s.add_argument("--output", help="output directory (default ./out)")
    for flag, what in (("--dump-mesh", "finest mesh as mesh.txt"),
                       ("--dump-system", "finest linear system as text"),
                       ("--dump-solution", "u_h on a uniform grid as solution.csv"),
                       ("--plot", "log-log error plot as error_plot.svg")):
        s.add_argument(flag, action="store_const", const=True, default=None,
                       help=f"write the {what}")
    s.add_argument("-v", "--verbose", action="store_true")

    sub.add_parser("cases", help="list registered cases")
    return p


def _solve(args) -> int:
    overrides = {k: getattr(args, k) for k in
                 ("case", "element", "levels", "gamma", "tol", "output",
                  "dump_mesh", "dump_system", "dump_solution", "plot")}
    try:
        cfg = RunConfig.from_sources(args.config, overrides)
    except (ConfigError, OSError, json.JSONDecodeError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    os.makedirs(cfg.output, exist_ok=True)
    case = case_registry.get_case(cfg.case)
    status = 0
    try:
        table, results = run_convergence_study(case, cfg.element, cfg.levels, cfg.gamma,
                                               cfg.tol, keep_levels=True)
    except StudyError as exc:
        print(f"error: {exc}", file=sys.stderr)
        table, results, status = exc.table, exc.levels, 1
    except Exception as exc:  # noqa: BLE001 - report any module error as exit status
        print(f"error: {exc}", file=sys.stderr)
        return 1

    table.write_csv(os.path.join(cfg.output, "convergence.csv"))
    sys.stdout.write(table.to_csv())
    for rec, res in zip(table, results):
        if res.report.relative_residual > cfg.tol:
            status = 1
    if cfg.plot and len(table):
        emit_plot(table, os.path.join(cfg.output, "error_plot.svg"))
    if results:
        last = results[-1]
        if cfg.dump_mesh:
            write_mesh(last.mesh, os.path.join(cfg.output, "mesh.txt"))
        if cfg.dump_system:
            write_system(last.system, os.path.join(cfg.output, "system_matrix.txt"),
                         os.path.join(cfg.output, "system_rhs.txt"))
        if cfg.dump_solution:
            pts, uh, uhat = sample_solution(last.solution)
            _write_solution(os.path.join(cfg.output, "solution.csv"), pts, uh, uhat)
    with open(os.path.join(cfg.output, "run_config.json"), "w") as fh:
        json.dump(asdict(cfg), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return status


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    configure_threads()
    if args.command == "cases":
        for name in case_registry.registered_cases():
            print(f"{name:14s} {case_registry.get_case(name).description}")
        return 0
    logger.info("kernel backend: %s", BACKEND)
    return _solve(args)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
