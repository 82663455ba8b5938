import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chainlab.errors import MeshError, OutsideDomainError
from chainlab.mesh import (
    locate,
    locate_many,
    mesh_from_arrays,
    read_off,
    refine,
    triangulate,
    triangulate_rings,
    write_off,
)
from chainlab.presets import two_squares


def _contains(mesh, t, x, tol=1e-12):
    lam = mesh.barycentric(t, x)
    return np.all(lam >= -tol)


def test_unit_square_mesh(unit_square):
    mesh = triangulate(unit_square.build(0.5), 0.5)
    assert len(mesh.vertices) >= 9
    assert mesh.area == pytest.approx(1.0, rel=1e-12)
    assert mesh.h_max <= 0.5 * (1 + 1e-12)
    assert mesh.min_angle >= 20.0 - 1e-9


def test_triangles_positively_oriented(dumbbell_dom):
    mesh = triangulate(dumbbell_dom, 0.1)
    p = mesh.vertices[mesh.triangles]
    cross = (p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1]) - (p[:, 1, 1] - p[:, 0, 1]) * (
        p[:, 2, 0] - p[:, 0, 0]
    )
    assert np.all(cross > 0)


def test_boundary_nodes_are_mesh_vertices(dumbbell_dom):
    mesh = triangulate(dumbbell_dom, 0.05)
    v = {tuple(p) for p in mesh.vertices}
    assert all(tuple(p) in v for p in dumbbell_dom.rings[0])


def test_dumbbell_area_and_euler(dumbbell_dom):
    mesh = triangulate(dumbbell_dom, 0.05)
    assert mesh.area == pytest.approx(9.0, rel=1e-10)
    assert mesh.euler_characteristic() == 1
    assert not mesh.quality_fallback


def test_thin_neck_resolution():
    dom = two_squares(0.02).build(0.005)
    mesh = triangulate(dom, 0.05, neck_h=0.005)
    assert mesh.area == pytest.approx(8.04, abs=1e-8)
    # at least three elements across the neck: vertices on the slice x = 0
    xs = mesh.vertices[np.abs(mesh.vertices[:, 0]) < 0.2]
    inside = xs[np.abs(xs[:, 1]) < 0.01 - 1e-12]
    assert len(inside) >= 2
    tri_in_neck = mesh.region >= 0
    p = mesh.vertices[mesh.triangles[tri_in_neck]]
    assert np.max(np.linalg.norm(p - np.roll(p, 1, axis=1), axis=2)) <= 0.005 * (1 + 1e-9)


def test_neck_too_coarse_rejected():
    dom = two_squares(0.1).build(0.02)
    with pytest.raises(MeshError):
        triangulate(dom, 0.05)


def test_deterministic(dumbbell_dom):
    a = triangulate(dumbbell_dom, 0.1)
    b = triangulate(dumbbell_dom, 0.1)
    assert np.array_equal(a.vertices, b.vertices) and np.array_equal(a.triangles, b.triangles)


def test_refine_two_triangle_square():
    mesh = mesh_from_arrays(np.array([[0, 0], [1, 0], [1, 1], [0, 1.0]]), np.array([[0, 1, 2], [0, 2, 3]]))
    fine = refine(mesh)
    assert len(fine.triangles) == 8
    assert fine.area == pytest.approx(1.0)
    assert fine.h_max == pytest.approx(mesh.h_max / 2)


def test_refine_preserves_angles(unit_square):
    mesh = triangulate(unit_square.build(0.25), 0.25)
    fine = refine(mesh)
    assert len(fine.triangles) == 4 * len(mesh.triangles)
    assert fine.min_angle == pytest.approx(mesh.min_angle, abs=1e-9)
    assert set(map(tuple, mesh.vertices[mesh.boundary_nodes])) <= set(map(tuple, fine.vertices))


def test_locate_centroid_and_vertex(dumbbell_dom):
    mesh = triangulate(dumbbell_dom, 0.1)
    t = 17
    c = mesh.vertices[mesh.triangles[t]].mean(axis=0)
    k, lam = locate(mesh, c)
    assert k == t and np.allclose(lam, 1 / 3)
    v = mesh.triangles[5, 1]
    k, lam = locate(mesh, mesh.vertices[v])
    assert v in mesh.triangles[k] and np.isclose(lam.max(), 1.0)


def test_locate_outside(dumbbell_dom):
    mesh = triangulate(dumbbell_dom, 0.1)
    with pytest.raises(OutsideDomainError):
        locate(mesh, np.array([0.0, 0.9]))


def test_locate_many_brute_force(dumbbell_dom, rng):
    mesh = triangulate(dumbbell_dom, 0.1)
    from chainlab.partition import sample_points

    pts = sample_points(dumbbell_dom, 1000, seed=3)
    idx, lam = locate_many(mesh, pts)
    assert np.all(lam >= -1e-10)
    assert np.allclose(lam.sum(axis=1), 1.0)
    for t, x in zip(idx[:50], pts[:50]):
        assert _contains(mesh, t, x, 1e-10)


def test_off_roundtrip(tmp_path, dumbbell_dom):
    mesh = triangulate(dumbbell_dom, 0.15)
    p = tmp_path / "m.off"
    write_off(mesh, p)
    assert p.read_text().splitlines()[0] == "OFF"
    v, t = read_off(p)
    assert np.allclose(v, mesh.vertices) and np.array_equal(t, mesh.triangles)


def test_rings_keep_boundary_indices():
    ring = np.array([[0, 0], [0.5, 0], [1, 0], [1, 0.5], [1, 1], [0.5, 1], [0, 1], [0, 0.5]], dtype=float)
    mesh = triangulate_rings([ring], 0.55, keep_boundary=True)
    assert np.array_equal(mesh.vertices[: len(ring)], ring)
    assert len(mesh.boundary_nodes) == len(ring)


@settings(max_examples=15, deadline=None)
@given(st.floats(0.04, 0.5 / 3))
def test_area_exact_for_any_h(h):
    dom = two_squares(0.5).build(h)
    mesh = triangulate(dom, h)
    assert mesh.area == pytest.approx(dom.area, rel=1e-10)
    assert mesh.h_max <= h * (1 + 1e-9)
