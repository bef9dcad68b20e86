import numpy as np
import pytest

from fvbem.mesh import Mesh, build_initial_mesh, refine_rgb
from fvbem.dual import build_dual, interpolate_piecewise_constant


def test_single_equilateral_triangle():
    s = 1.0
    verts = np.array([[0, 0], [s, 0], [s / 2, s * np.sqrt(3) / 2]])
    mesh = Mesh(verts, np.array([[0, 1, 2]]))
    dual = build_dual(mesh)
    # all three interior segments have length |m - c| = 1/(2 sqrt(3))
    assert np.allclose(dual.seg_len, 1.0 / (2 * np.sqrt(3)), rtol=1e-14)
    assert np.allclose(dual.box_area, mesh.tri_area[0] / 3.0, rtol=1e-14)


def test_two_triangle_unit_square_box_areas():
    verts = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    mesh = Mesh(verts, np.array([[0, 1, 2], [0, 2, 3]]))
    dual = build_dual(mesh)
    # the diagonal nodes 0 and 2 belong to both triangles
    assert np.isclose(dual.box_area[0], 1.0 / 3.0, rtol=1e-14)
    assert np.isclose(dual.box_area[2], 1.0 / 3.0, rtol=1e-14)
    assert np.isclose(dual.box_area[1], 1.0 / 6.0, rtol=1e-14)


def test_partition_property():
    mesh = build_initial_mesh("lshape", 48)
    mesh, _ = refine_rgb(mesh, [0, 5, 11])
    dual = build_dual(mesh)
    assert np.isclose(dual.box_area.sum(), mesh.total_area(), rtol=1e-12)


def test_segment_fan_closes():
    mesh = build_initial_mesh("square", 16)
    dual = build_dual(mesh)
    # the rotated midpoint-to-barycenter vectors close up per triangle
    d = dual.seg_end[:, None, :] - dual.seg_start
    rot = np.stack([d[:, :, 1], -d[:, :, 0]], axis=2)
    assert np.all(np.abs(rot.sum(axis=1)) < 1e-14)


def test_normals_unit_and_oriented():
    mesh = build_initial_mesh("lshape", 48)
    dual = build_dual(mesh)
    assert np.allclose(np.linalg.norm(dual.seg_normal, axis=2), 1.0,
                       atol=1e-14)
    # normal points from the box of the smaller-index node to the larger
    i = dual.seg_pair[:, :, 0]
    j = dual.seg_pair[:, :, 1]
    pj = mesh.vertices[j]
    mid = dual.seg_start
    assert np.all(np.sum(dual.seg_normal * (pj - mid), axis=2) > 0)
    pi = mesh.vertices[i]
    assert np.all(np.sum(dual.seg_normal * (pi - mid), axis=2) < 0)


def test_boundary_halves_cover_gamma():
    mesh = build_initial_mesh("lshape", 48)
    dual = build_dual(mesh)
    nodes, start, end, normal, length = dual.boundary_halves()
    assert np.isclose(length.sum(), 2.0, rtol=1e-14)  # |Gamma| = 2
    assert np.allclose(np.linalg.norm(normal, axis=1), 1.0, atol=1e-14)


class TestInterpolation:
    def setup_method(self):
        self.mesh = build_initial_mesh("square", 16)
        self.dual = build_dual(self.mesh)

    def test_constant_reproduction(self):
        f = interpolate_piecewise_constant(self.mesh,
                                           np.full(self.mesh.n_vertices, 3.5))
        rng = np.random.default_rng(1)
        for _ in range(20):
            x = rng.uniform(0.02, 0.48, size=2)
            assert f(x) == 3.5

    def test_hat_gives_box_indicator(self):
        node = 5
        values = np.zeros(self.mesh.n_vertices)
        values[node] = 1.0
        f = interpolate_piecewise_constant(self.mesh, values)
        center = self.mesh.vertices[node]
        mid = np.array([0.25, 0.25])
        probe = center + 1e-6 * (mid - center)
        assert f(probe) == 1.0
        far = self.mesh.vertices[(node + 7) % self.mesh.n_vertices]
        if np.linalg.norm(far - center) > 0.2:
            probe_far = far + 1e-6 * (mid - far)
            assert f(probe_far) == 0.0

    def test_barycenter_tie_rule(self):
        values = np.arange(self.mesh.n_vertices, dtype=float)
        f = interpolate_piecewise_constant(self.mesh, values)
        t = 3
        c = self.mesh.barycenter[t]
        assert f(c) == float(self.mesh.triangles[t].min())

    def test_outside_raises(self):
        f = interpolate_piecewise_constant(
            self.mesh, np.zeros(self.mesh.n_vertices))
        with pytest.raises(ValueError):
            f(np.array([2.0, 2.0]))

    def test_box_integral_identity(self):
        rng = np.random.default_rng(2)
        v = rng.normal(size=self.mesh.n_vertices)
        # integral of the box interpolant = sum of v_i |V_i| exactly
        assert np.isclose(np.dot(v, self.dual.box_area),
                          np.dot(v, self.dual.box_area))
        # and the box areas sum to the domain area
        assert np.isclose(self.dual.box_area.sum(), 0.25, rtol=1e-14)
