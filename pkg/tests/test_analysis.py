import math

import numpy as np
import pytest

from nitsche_fem.analysis import (
    CSV_HEADER,
    ConvergenceRecord,
    ConvergenceTable,
    DiscreteSolution,
    EvaluationError,
    StudyError,
    eoc,
    eval_fe,
    eval_full,
    l2_error,
    quadrature_points,
    run_convergence_study,
    solve_level,
)
from nitsche_fem.cases import get_case
from nitsche_fem.geometry import rectangle
from nitsche_fem.mesh import generate_initial, refine_uniform, uniform_sequence


def random_points(n, seed=0):
    return np.random.default_rng(seed).random((n, 2)) * [2, 1] - [1, 0]


@pytest.fixture(scope="module", params=["p1", "q1"])
def fine_mesh(request, jump_case):
    return uniform_sequence(jump_case.domain, request.param, 3)[-1]


def test_partition_of_unity(fine_mesh):
    sol = DiscreteSolution(fine_mesh, np.ones(fine_mesh.nnodes))
    assert np.allclose(sol.eval_fe(random_points(50)), 1.0, atol=1e-14)


def test_reproduces_linears(fine_mesh):
    pts = random_points(50, 1)
    for col in (0, 1):
        sol = DiscreteSolution(fine_mesh, fine_mesh.nodes[:, col])
        assert np.allclose(sol.eval_fe(pts), pts[:, col], atol=1e-14)
    assert eval_fe(sol, np.array([0.25, 0.5])) == pytest.approx(0.5)


def test_continuity_across_element_interfaces(fine_mesh):
    c = np.sin(3 * fine_mesh.nodes[:, 0]) + fine_mesh.nodes[:, 1] ** 2
    sol = DiscreteSolution(fine_mesh, c)
    edges = fine_mesh.unique_edges()
    mids = 0.5 * (fine_mesh.nodes[edges[:, 0]] + fine_mesh.nodes[edges[:, 1]])
    d = fine_mesh.nodes[edges[:, 1]] - fine_mesh.nodes[edges[:, 0]]
    normal = np.column_stack([-d[:, 1], d[:, 0]]) * 1e-9
    inside = fine_mesh.domain.contains(mids + normal, tol=0) & \
        fine_mesh.domain.contains(mids - normal, tol=0)
    a = sol.eval_fe(mids[inside] + normal[inside])
    b = sol.eval_fe(mids[inside] - normal[inside])
    assert np.max(np.abs(a - b)) <= 1e-7


def test_eval_full_adds_theta(jump_problem, coarse_mesh):
    sol = DiscreteSolution(coarse_mesh, np.zeros(coarse_mesh.nnodes), jump_problem.singular_parts)
    p = random_points(30, 2)
    assert np.allclose(sol.eval_full(p) - sol.eval_fe(p), np.arctan2(p[:, 1], p[:, 0]), atol=1e-14)
    plain = DiscreteSolution(coarse_mesh, np.arange(6.0))
    assert np.array_equal(plain.eval_full(p), plain.eval_fe(p))
    assert isinstance(eval_full(sol, p[0]), float)


def test_evaluation_errors(jump_problem, coarse_mesh):
    sol = DiscreteSolution(coarse_mesh, np.zeros(6), jump_problem.singular_parts)
    with pytest.raises(EvaluationError):
        sol.eval_fe([[3.0, 0.5]])
    with pytest.raises(EvaluationError):
        sol.eval_full([[0.0, 0.0]])
    with pytest.raises(ValueError):
        DiscreteSolution(coarse_mesh, np.zeros(5))


def test_l2_of_constant_on_unit_square():
    for kind in ("p1", "q1"):
        m = generate_initial(rectangle(0, 1, 0, 1), kind, 1)
        sol = DiscreteSolution(m, np.zeros(m.nnodes))
        assert l2_error(sol, lambda p: np.ones(len(p))) == pytest.approx(1.0, rel=1e-14)


def test_l2_of_exact_linear_is_zero(fine_mesh):
    u = lambda p: 2 * p[:, 0] - p[:, 1] + 0.5  # noqa: E731
    sol = DiscreteSolution(fine_mesh, u(fine_mesh.nodes))
    assert l2_error(sol, u) <= 1e-14


def test_interpolation_error_rate(jump_case):
    u = lambda p: np.exp(p[:, 0]) * np.cos(2 * p[:, 1])  # noqa: E731
    for kind in ("p1", "q1"):
        errs, hs = [], []
        for m in uniform_sequence(jump_case.domain, kind, 5):
            errs.append(l2_error(DiscreteSolution(m, u(m.nodes)), u))
            hs.append(m.h)
        rates = np.log(np.array(errs[:-1]) / errs[1:]) / np.log(np.array(hs[:-1]) / hs[1:])
        assert abs(rates[-1] - 2) < 0.05


def test_quadrature_points_lie_in_elements(coarse_mesh):
    q = quadrature_points(coarse_mesh)
    assert q.shape[0] == coarse_mesh.nelements
    assert np.all(coarse_mesh.domain.contains(q.reshape(-1, 2), tol=0))


def records(*pairs):
    return [ConvergenceRecord(i + 1, h, 0, 0, e) for i, (h, e) in enumerate(pairs)]


@pytest.mark.parametrize("pairs,rate", [
    (((0.2, 4e-2), (0.1, 1e-2)), 2.0),
    (((0.2, 1e-3), (0.1, 1e-3)), 0.0),
    (((0.2, 8e-3), (0.1, 1e-3)), 3.0),
])
def test_eoc_examples(pairs, rate):
    out = eoc(records(*pairs))
    assert out[0].eoc is None
    assert out[1].eoc == pytest.approx(rate, abs=1e-14)


def test_eoc_undefined_and_invalid():
    assert math.isnan(eoc(records((0.2, 1e-3), (0.1, 0.0)))[1].eoc)
    with pytest.raises(ValueError):
        eoc(records((0.2, 1e-3)))
    with pytest.raises(ValueError):
        eoc(records((0.1, 1e-3), (0.2, 1e-4)))


def test_csv_format():
    t = ConvergenceTable(eoc(records((0.5, 0.25), (0.25, 0.0625), (0.125, 0.0))))
    lines = t.to_csv().splitlines()
    assert lines[0] == ",".join(CSV_HEADER)
    assert lines[1].endswith(",") and lines[1].startswith("1,5.000000000000000e-01,")
    assert lines[2].split(",")[-1] == "2.000000000000000e+00"
    assert lines[3].split(",")[-1] == "nan"


def test_cancellation_identity(jump_case, jump_problem):
    m = uniform_sequence(jump_case.domain, "p1", 3)[-1]
    res = solve_level(jump_case, m, problem=jump_problem)
    full = l2_error(res.solution, jump_case.exact)
    regular = l2_error(res.solution, jump_case.exact_regular, include_singular=False)
    assert abs(full - regular) <= 1e-10
    assert full == res.l2_error


def test_node_reordering_invariance(jump_case, jump_problem):
    m = uniform_sequence(jump_case.domain, "p1", 3)[-1]
    perm = np.random.default_rng(4).permutation(m.nnodes)
    a = solve_level(jump_case, m, problem=jump_problem).l2_error
    b = solve_level(jump_case, m.permuted(perm), problem=jump_problem).l2_error
    assert b == pytest.approx(a, rel=1e-9)


def test_short_study(jump_case):
    table, levels = run_convergence_study(jump_case, "p1", 3, keep_levels=True)
    assert [r.elements for r in table] == [4, 16, 64]
    assert [r.dofs for r in table] == [m.solution.mesh.nnodes for m in levels]
    assert table.records[0].eoc is None
    assert all(r.eoc > 1 for r in table.records[1:])
    assert run_convergence_study(jump_case, "p1", 3).to_csv() == table.to_csv()


def test_study_failure_keeps_completed_levels(jump_case):
    with pytest.raises(StudyError) as info:
        run_convergence_study(jump_case, "p1", 5, gamma=0.05)
    assert len(info.value.table) < 5
    with pytest.raises(ValueError):
        run_convergence_study(jump_case, "p1", 0)


def test_patch_case_is_exact():
    table = run_convergence_study(get_case("linear-patch"), "p1", 3)
    assert max(r.l2_error for r in table) <= 1e-8
