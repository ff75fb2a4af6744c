import itertools
import math

import numpy as np
import pytest

from ndform.mesh import MeshError, build_rect_mesh, mesh_from_arrays, mesh_stats

UNIT = (0.0, 1.0, 0.0, 1.0)


def enumerate_edges(triangles):
    """Brute-force edge -> incident triangles map."""
    incident = {}
    for t, tri in enumerate(triangles.tolist()):
        for a, b in itertools.combinations(tri, 2):
            incident.setdefault((min(a, b), max(a, b)), []).append(t)
    return incident


def test_smallest_mesh():
    m = build_rect_mesh(UNIT, 1)
    s = mesh_stats(m)
    assert m.n_vertices == 4
    assert s["n_triangles"] == 2
    assert s["n_interior_edges"] == 1
    assert s["n_boundary_edges"] == 4
    assert s["h_max"] == pytest.approx(math.sqrt(2), rel=1e-15)


def test_n2_counts_match_enumeration():
    m = build_rect_mesh(UNIT, 2)
    incident = enumerate_edges(m.triangles)
    n_interior = sum(len(v) == 2 for v in incident.values())
    n_boundary = sum(len(v) == 1 for v in incident.values())
    assert (n_interior, n_boundary) == (8, 8)
    s = mesh_stats(m)
    assert m.n_vertices == 9 and s["n_triangles"] == 8
    assert (s["n_interior_edges"], s["n_boundary_edges"]) == (8, 8)
    assert s["h_min"] == pytest.approx(0.5, rel=1e-15)


@pytest.mark.parametrize("n", [1, 2, 3, 5, 8, 13])
def test_count_formulas(n):
    m = build_rect_mesh(UNIT, n)
    assert m.n_vertices == (n + 1) ** 2
    assert m.n_triangles == 2 * n * n
    assert m.n_edges == 3 * n * n + 2 * n
    assert len(m.interior_edges) == 3 * n * n - 2 * n
    # edge set matches brute-force enumeration exactly
    incident = enumerate_edges(m.triangles)
    assert sorted(incident) == [tuple(e) for e in m.edge_vertices.tolist()]
    for e, key in enumerate(map(tuple, m.edge_vertices.tolist())):
        tris = incident[key]
        assert m.edge_plus[e] == tris[0]
        assert m.edge_minus[e] == (tris[1] if len(tris) == 2 else -1)


def test_small_square_h_max():
    m = build_rect_mesh((0.0, 0.5, 0.0, 0.5), 8)
    assert m.h_max == pytest.approx(math.sqrt(2) / 16, rel=1e-14)


@pytest.mark.parametrize("n", [1, 2, 4, 7, 16, 64])
def test_area_partition(n):
    m = build_rect_mesh((-0.5, 0.5, -0.5, 0.5), n)
    areas = m.signed_areas()
    assert np.all(areas > 0)
    assert areas.sum() == pytest.approx(1.0, rel=1e-12)


def test_area_partition_all_levels():
    for n in range(1, 65):
        m = build_rect_mesh((0.0, 2.0, -1.0, 0.5), n)
        assert m.signed_areas().sum() == pytest.approx(3.0, rel=1e-12)


def test_edge_records():
    m = build_rect_mesh((-0.5, 0.5, -0.5, 0.5), 4)
    V = m.vertices
    for e in m.edges:
        p0, p1 = V[e.vertices[0]], V[e.vertices[1]]
        assert e.length == pytest.approx(np.linalg.norm(p1 - p0), abs=1e-15)
        nrm = np.array(e.normal)
        assert abs(np.linalg.norm(nrm) - 1.0) < 1e-14
        assert abs(nrm @ (p1 - p0)) < 1e-14
        c_plus = V[m.triangles[e.plus_triangle]].mean(axis=0)
        mid = 0.5 * (p0 + p1)
        assert nrm @ (mid - c_plus) > 0
        if e.is_boundary:
            assert e.minus_triangle is None
        else:
            assert e.plus_triangle < e.minus_triangle
            c_minus = V[m.triangles[e.minus_triangle]].mean(axis=0)
            assert nrm @ (c_minus - mid) > 0


def test_incidence_involutive():
    m = build_rect_mesh(UNIT, 6)
    for e in m.interior_edges:
        for t in (m.edge_plus[e], m.edge_minus[e]):
            assert list(m.tri_edges[t]).count(e) == 1


def test_tri_edges_opposite_vertex():
    m = build_rect_mesh(UNIT, 3)
    for t, tri in enumerate(m.triangles):
        for l in range(3):
            ev = set(m.edge_vertices[m.tri_edges[t, l]].tolist())
            assert tri[l] not in ev


@pytest.mark.parametrize("n", [1, 2, 4, 8, 16, 32])
def test_refinement_halves_h(n):
    a = build_rect_mesh(UNIT, n)
    b = build_rect_mesh(UNIT, 2 * n)
    assert b.h_max == a.h_max / 2


def test_quasi_uniformity():
    for n in (1, 3, 10):
        m = build_rect_mesh((0.0, 1.0, 0.0, 1.0), n)
        assert m.h_max / m.h_min <= 2


def test_ordering_is_row_major_and_lower_first():
    m = build_rect_mesh(UNIT, 2)
    np.testing.assert_allclose(m.vertices[:3], [[0, 0], [0.5, 0], [1, 0]])
    np.testing.assert_array_equal(m.triangles[0], [0, 1, 4])
    np.testing.assert_array_equal(m.triangles[1], [0, 4, 3])


def test_locate_round_trip(rng):
    m = build_rect_mesh((-0.5, 0.5, -0.5, 0.5), 5)
    pts = rng.uniform(-0.5, 0.5, size=(200, 2))
    tri, ref = m.locate(pts)
    assert np.all(ref >= -1e-12) and np.all(ref.sum(axis=1) <= 1 + 1e-12)
    v = m.vertices[m.triangles[tri]]
    back = v[:, 0] + ref[:, :1] * (v[:, 1] - v[:, 0]) + ref[:, 1:] * (v[:, 2] - v[:, 0])
    np.testing.assert_allclose(back, pts, atol=1e-14)


@pytest.mark.parametrize("domain", [(1.0, 1.0, 0.0, 1.0), (1.0, 0.0, 0.0, 1.0), (0, 1, 2, 1)])
def test_invalid_domain(domain):
    with pytest.raises(MeshError):
        build_rect_mesh(domain, 2)


def test_invalid_n():
    with pytest.raises(MeshError):
        build_rect_mesh(UNIT, 0)


def test_mesh_from_arrays_reorients():
    m = mesh_from_arrays([[0, 0], [0, 1], [1, 0]], [[0, 1, 2]])
    assert m.signed_areas()[0] == pytest.approx(0.5)
    assert len(m.boundary_edges) == 3


def test_export_text(tmp_path):
    m = build_rect_mesh(UNIT, 2)
    path = tmp_path / "m.txt"
    m.export_text(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "vertices 9 triangles 8"
    assert len(lines) == 1 + 9 + 8
    assert [float(v) for v in lines[5].split()] == m.vertices[4].tolist()
    assert [int(v) for v in lines[10].split()] == m.triangles[0].tolist()
