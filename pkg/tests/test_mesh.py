import math

import numpy as np
import pytest

from nitsche_fem.geometry import PolygonDomain, rectangle
from nitsche_fem.mesh import (
    Mesh,
    MeshError,
    UnsupportedDomainError,
    generate_initial,
    mesh_size,
    refine_uniform,
    uniform_sequence,
    write_mesh,
)


@pytest.fixture(scope="module")
def jump_sequence(jump_case):
    return uniform_sequence(jump_case.domain, "p1", 5)


def test_coarse_jump_mesh(coarse_mesh):
    assert coarse_mesh.nelements == 4
    assert coarse_mesh.nnodes == 6
    coarse_mesh.node_index((0.0, 0.0))


def test_unit_square_quad():
    m = generate_initial(rectangle(0, 1, 0, 1), "q1", 1)
    assert (m.nelements, m.nnodes) == (1, 4)
    assert mesh_size(m) == pytest.approx(math.sqrt(2))


def test_right_triangle_diameter():
    tri = PolygonDomain([[0, 0], [1, 0], [0, 1]])
    m = Mesh(tri, np.array([[0, 0], [1, 0], [0, 1.0]]), np.array([[0, 1, 2]]), "p1")
    assert mesh_size(m) == pytest.approx(math.sqrt(2))


def test_element_counts(jump_sequence):
    assert [m.nelements for m in jump_sequence] == [4 * 4**k for k in range(5)]
    assert jump_sequence[-1].nelements == 1024


def test_node_count_closed_form(jump_sequence):
    nx, ny = 2, 1
    for k, m in enumerate(jump_sequence):
        assert m.nnodes == (2**k * nx + 1) * (2**k * ny + 1)


def test_h_halves(jump_sequence):
    hs = np.array([m.h for m in jump_sequence])
    assert hs[0] == pytest.approx(math.sqrt(2))
    assert np.allclose(hs[1:] / hs[:-1], 0.5, rtol=0, atol=1e-15)


@pytest.mark.parametrize("kind", ["p1", "q1"])
def test_structural_invariants(jump_case, kind):
    dom = jump_case.domain
    for m in uniform_sequence(dom, kind, 4):
        m.check()
        assert np.all(m.areas() > 0)
        assert m.areas().sum() == pytest.approx(dom.area, rel=1e-12)
        V, E, F = m.nnodes, len(m.unique_edges()), m.nelements
        assert V - E + F == 1
        mids = 0.5 * (m.nodes[m.facet_nodes[:, 0]] + m.nodes[m.facet_nodes[:, 1]])
        assert np.all(np.einsum("ij,ij->i", m.facet_normal, mids - dom.centroid) > 0)
        for p in dom.points:
            m.node_index(p)
        d = m.diameters()
        assert d.max() / d.min() <= 8
        assert m.facet_lengths().sum() == pytest.approx(6.0, rel=1e-14)


def test_facet_tags_split_at_discontinuity(jump_sequence):
    for m in jump_sequence:
        a = m.nodes[m.facet_nodes[:, 0]]
        b = m.nodes[m.facet_nodes[:, 1]]
        tag = m.facet_edge
        # bottom edge splits at the origin into two partition edges
        bottom = (a[:, 1] == 0) & (b[:, 1] == 0)
        assert np.all(tag[bottom & (np.maximum(a[:, 0], b[:, 0]) <= 0)] == 0)
        assert np.all(tag[bottom & (np.minimum(a[:, 0], b[:, 0]) >= 0)] == 1)


def test_refinement_is_composable(jump_case):
    m = generate_initial(jump_case.domain, "p1", 1)
    twice = refine_uniform(refine_uniform(m))
    direct = uniform_sequence(jump_case.domain, "p1", 3)[-1]
    assert np.array_equal(twice.nodes, direct.nodes)
    assert np.array_equal(twice.elements, direct.elements)
    key = lambda X: X[np.lexsort(X.T)]  # noqa: E731
    fine = generate_initial(jump_case.domain, "p1", 4)
    assert np.allclose(key(twice.nodes), key(fine.nodes), atol=1e-15)


def test_q1_refinement_counts(jump_case):
    ms = uniform_sequence(jump_case.domain, "q1", 3)
    assert [m.nelements for m in ms] == [2, 8, 32]
    assert [m.nnodes for m in ms] == [6, 15, 45]


def test_unsupported_domains():
    tri = PolygonDomain([[0, 0], [1, 0], [0, 1]])
    with pytest.raises(UnsupportedDomainError):
        generate_initial(tri, "p1", 1)
    with pytest.raises(UnsupportedDomainError):
        generate_initial(rectangle(0, 1, 0, 1, [(0.3, 0)]), "p1", 1)
    with pytest.raises(UnsupportedDomainError):
        generate_initial(rectangle(0, 1.5, 0, 1), "p1", 1)
    with pytest.raises(MeshError):
        generate_initial(rectangle(0, 1, 0, 1), "p1", 0)


def test_clockwise_element_rejected_by_check():
    dom = rectangle(0, 1, 0, 1)
    nodes = np.array([[0, 0], [1, 0], [1, 1], [0, 1.0]])
    m = Mesh(dom, nodes, np.array([[0, 2, 1], [0, 2, 3]]), "p1")
    with pytest.raises(MeshError):
        m.check()


def test_mesh_is_immutable(coarse_mesh):
    with pytest.raises(ValueError):
        coarse_mesh.nodes[0, 0] = 5.0


def test_permutation_preserves_geometry(coarse_mesh):
    perm = np.random.default_rng(0).permutation(coarse_mesh.nnodes)
    p = coarse_mesh.permuted(perm)
    assert np.allclose(p.coords, coarse_mesh.coords)
    assert np.array_equal(p.facet_edge, coarse_mesh.facet_edge)


def test_write_mesh_is_deterministic(tmp_path, jump_sequence):
    m = jump_sequence[1]
    a, b = tmp_path / "a.txt", tmp_path / "b.txt"
    write_mesh(m, a)
    write_mesh(refine_uniform(jump_sequence[0]), b)
    assert a.read_bytes() == b.read_bytes()
    lines = a.read_text().splitlines()
    sections = [ln.split()[0] for ln in lines if ln.split()[0] in ("nodes", "elements", "boundary")]
    assert sections == ["nodes", "elements", "boundary"]
    assert f"nodes {m.nnodes}" in lines and f"elements {m.nelements}" in lines
