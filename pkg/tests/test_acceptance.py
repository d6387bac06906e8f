"""Acceptance criteria, one test and one printed PASS/FAIL line each.

Run alone with ``python tests/test_acceptance.py`` or
``pytest tests/test_acceptance.py -s``.
"""

import csv
import math
import subprocess
import sys
import time

import numpy as np
import pytest
import scipy.linalg as sla

from nitsche_fem.analysis import l2_error, run_convergence_study
from nitsche_fem.assembly import assemble
from nitsche_fem.boundary_data import (
    BoundaryData,
    EdgeTrace,
    build_singular_functions,
    one_sided_limits,
    sigma,
)
from nitsche_fem.cases import get_case
from nitsche_fem.geometry import rectangle
from nitsche_fem.mesh import generate_initial
from nitsche_fem.quadrature import triangle_rule
from nitsche_fem.solver import solve_spd
from oracles import dense_nitsche, fd_laplacian, gauss_eliminate, one_sided_derivative

REFERENCE_CMD = ["solve", "--case", "paper-3-3", "--element", "p1", "--levels", "5",
             "--gamma", "10"]


def run_cli(args, out):
    t0 = time.perf_counter()
    proc = subprocess.run([sys.executable, "-m", "nitsche_fem", *args, "--output", str(out)],
                          capture_output=True, text=True, env={"NITSCHE_FEM_THREADS": "0",
                                                              **_base_env()})
    return proc, time.perf_counter() - t0


def _base_env():
    import os
    return {k: v for k, v in os.environ.items() if k != "NITSCHE_FEM_THREADS"}


def read_rows(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


@pytest.fixture(scope="module")
def reference_runs(tmp_path_factory):
    runs = []
    for name in ("first", "second"):
        out = tmp_path_factory.mktemp(name)
        proc, seconds = run_cli(REFERENCE_CMD, out)
        runs.append((proc, seconds, out))
    return runs


def test_criterion_1_jump_experiment(reference_runs, acceptance_line):
    proc, seconds, out = reference_runs[0]
    rows = read_rows(out / "convergence.csv")
    rates = [float(r["eoc"]) for r in rows[-2:]]
    ok = (proc.returncode == 0 and len(rows) == 5 and rows[-1]["elements"] == "1024"
          and all(1.8 <= r <= 2.2 for r in rates) and seconds < 60)
    acceptance_line(1, "paper-3-3 P1, final two EOC in [1.8, 2.2], < 60 s", ok,
                    f"eoc {rates[0]:.3f}, {rates[1]:.3f}; {seconds:.1f} s")
    assert ok, proc.stderr


def test_criterion_2_smooth_rate(tmp_path, acceptance_line):
    proc, _ = run_cli(["solve", "--case", "smooth-sine", "--levels", "4"], tmp_path)
    rows = read_rows(tmp_path / "convergence.csv")
    rate = float(rows[-1]["eoc"])
    ok = proc.returncode == 0 and len(rows) == 4 and 1.85 <= rate <= 2.15
    acceptance_line(2, "smooth-sine EOC in [1.85, 2.15] over 4 levels", ok, f"eoc {rate:.3f}")
    assert ok


def test_criterion_3_linear_patch(acceptance_line):
    table = run_convergence_study(get_case("linear-patch"), "p1", 5)
    worst = max(r.l2_error for r in table)
    ok = worst <= 1e-8
    acceptance_line(3, "linear patch L2 error <= 1e-8 at every level", ok, f"max {worst:.2e}")
    assert ok


def test_criterion_4_regularization_identities(jump_problem, acceptance_line):
    g = jump_problem.g_hat
    # partition edge 0 arrives at the origin, edge 1 leaves it
    arrive, leave = g[0], g[1]
    eps = 1e-13
    value_jump = abs(leave.value(np.array([eps]))[0]
                     - arrive.value(np.array([arrive.length - eps]))[0])
    # cubic extrapolation: truncation ~ step^3, round-off floor near step 3e-5
    step = 1e-4
    d_plus = one_sided_derivative(lambda s: leave.value(s), step)
    d_minus = -one_sided_derivative(lambda s: arrive.value(arrive.length - s), step)
    deriv_jump = abs(d_plus - d_minus)
    ok = value_jump <= 1e-12 and deriv_jump <= 1e-8
    acceptance_line(4, "g_hat continuous (1e-12) with continuous derivative (1e-8) at origin",
                    ok, f"{value_jump:.1e}, {deriv_jump:.1e}")
    assert ok


def _multi_point_singulars():
    dom = rectangle(0, 1, 0, 1, [(0, 0), (0.5, 0), (1, 1), (0, 0.5)])
    rng = np.random.default_rng(7)
    coef = rng.normal(size=(dom.M, 3))
    L = [dom.edge_length(i) for i in range(dom.M)]
    end = lambda i: coef[i, 0] + coef[i, 1] * L[i] + coef[i, 2] * L[i] ** 2  # noqa: E731
    coef[2, 0], coef[4, 0] = end(1), end(3)
    traces = [EdgeTrace(lambda s, c=c: c[0] + c[1] * s + c[2] * s * s,
                        lambda s, c=c: c[1] + 2 * c[2] * np.asarray(s, dtype=float), L[i])
              for i, c in enumerate(coef)]
    data = BoundaryData(dom, traces)
    return data, build_singular_functions(data)


def _harmonic_rates(fn, pts):
    errs = [np.max(np.abs(fd_laplacian(fn, pts, h))) for h in (4e-2, 2e-2, 1e-2)]
    return np.log2(np.array(errs[:-1]) / np.array(errs[1:]))


def test_criterion_5_singular_functions(jump_case, jump_problem, acceptance_line):
    rng = np.random.default_rng(2024)
    pts = []
    while len(pts) < 20:
        p = rng.random(2) * [2, 1] - [1, 0]
        if p[1] > 0.1 and np.hypot(*p) > 0.2 and abs(abs(p[0]) - 1) > 0.1 and p[1] < 0.9:
            pts.append(p)
    pts = np.array(pts)
    (theta,) = jump_problem.singular_parts
    frame = theta.frame

    def sigma_xy(p):
        r, t = frame.polar(p)
        return np.array([sigma(ri, ti) for ri, ti in zip(r, t)])

    rates = np.concatenate([_harmonic_rates(theta, pts), _harmonic_rates(sigma_xy, pts)])
    laplace_ok = bool(np.all((rates > 1.8) & (rates < 2.2)))

    worst = 0.0
    for data, sing in ((jump_case.boundary_data(), jump_problem.singular_parts),
                       _multi_point_singulars()):
        dom = data.domain
        for s, i in zip(sing, dom.singular_indices):
            jump_i = one_sided_limits(data.traces, i).jump_g
            for j in range(dom.M):
                a = dom.points[j]
                plus = a + 1e-12 * dom.tangent(j)
                minus = a - 1e-12 * dom.tangent(j - 1)
                jump = s(plus[None])[0] - s(minus[None])[0]
                worst = max(worst, abs(jump - (jump_i if i == j else 0.0)))
    ok = laplace_ok and worst <= 1e-10
    acceptance_line(5, "Theta and sigma harmonic (FD order 2), jumps reproduced to 1e-10", ok,
                    f"rates {rates.min():.2f}..{rates.max():.2f}, jump error {worst:.1e}")
    assert ok


def test_criterion_6_oracle_equivalence(jump_case, jump_problem, coarse_mesh, acceptance_line):
    def f_hat(p):
        r2 = np.sum(p * p, axis=1)
        return ((5 - 4 * r2) * np.exp(-r2) - 1) * np.arctan2(np.abs(p[:, 1]), p[:, 0])

    s = assemble(coarse_mesh, jump_problem, gamma=10.0)
    A, b = dense_nitsche(coarse_mesh, jump_case.mu, f_hat, jump_case.exact_regular,
                         10.0, coarse_mesh.h, triangle_rule(4))
    mat = np.max(np.abs(s.matrix.toarray() - A)) / np.max(np.abs(A))
    vec = np.max(np.abs(s.rhs - b)) / np.max(np.abs(b))
    x_ref = gauss_eliminate(A, b)
    x = solve_spd(s, tol=1e-14).solution
    sol = np.max(np.abs(x - x_ref)) / np.max(np.abs(x_ref))
    ok = mat <= 1e-12 and vec <= 1e-12 and sol <= 1e-10
    acceptance_line(6, "sparse vs dense assembly 1e-12, CG vs elimination 1e-10", ok,
                    f"{mat:.1e}, {vec:.1e}, {sol:.1e}")
    assert ok


def test_criterion_7_algebraic_invariants(jump_problem, coarse_mesh, acceptance_line):
    D = assemble(coarse_mesh, jump_problem, gamma=10.0).matrix.toarray()
    asym = np.max(np.abs(D - D.T)) / np.max(np.abs(D))
    try:
        sla.cholesky(D)
        spd = True
    except np.linalg.LinAlgError:
        spd = False
    lam = [np.linalg.eigvalsh(assemble(coarse_mesh, jump_problem, gamma=g).matrix.toarray())[0]
           for g in (1.0, 10.0, 100.0)]
    ok = asym <= 1e-12 and spd and lam[0] <= lam[1] <= lam[2]
    acceptance_line(7, "symmetric, Cholesky at gamma 10, lambda_min nondecreasing in gamma", ok,
                    f"asym {asym:.1e}, lambda_min " + ", ".join(f"{v:.3g}" for v in lam))
    assert ok


def test_criterion_8_cancellation_identity(jump_case, acceptance_line):
    _, levels = run_convergence_study(jump_case, "p1", 5, keep_levels=True)
    worst = max(abs(l2_error(r.solution, jump_case.exact)
                    - l2_error(r.solution, jump_case.exact_regular, include_singular=False))
                for r in levels)
    ok = worst <= 1e-10
    acceptance_line(8, "||u - u_h|| equals ||u_hat - u_hat_h|| within 1e-10", ok,
                    f"max difference {worst:.1e}")
    assert ok


def test_criterion_9_determinism(reference_runs, acceptance_line):
    (p1, _, a), (p2, _, b) = reference_runs
    same = (a / "convergence.csv").read_bytes() == (b / "convergence.csv").read_bytes()
    ok = p1.returncode == 0 and p2.returncode == 0 and same
    acceptance_line(9, "two runs give byte-identical convergence.csv", ok)
    assert ok


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-s", "-p", "no:cacheprovider"]))
