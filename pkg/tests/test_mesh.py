import numpy as np
import pytest

from fvbem.mesh import (
    Mesh, build_initial_mesh, refine_rgb, shape_regularity,
    polygon_area, LSHAPE_POLYGON, SQUARE_POLYGON,
)


def unit_square_two():
    verts = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    tris = np.array([[0, 1, 2], [0, 2, 3]])
    return Mesh(verts, tris)


def assert_conforming(mesh):
    # every interior edge has 2 adjacent triangles, boundary edges 1
    interior = mesh.edge_tris[:, 1] >= 0
    assert np.all(mesh.edge_tris[interior, 0] >= 0)
    # no hanging nodes: an edge midpoint must never coincide with a vertex
    vert_keys = {(round(x, 12), round(y, 12)) for x, y in mesh.vertices}
    mid_keys = {(round(x, 12), round(y, 12)) for x, y in mesh.edge_mid}
    assert not vert_keys & mid_keys


class TestInitialMeshes:
    def test_lshape_48(self):
        mesh = build_initial_mesh("lshape", 48)
        assert mesh.n_triangles == 48
        assert mesh.n_vertices == 33
        assert len(mesh.boundary_edges) == 16
        assert np.isclose(mesh.total_area(), polygon_area(LSHAPE_POLYGON),
                          rtol=1e-12)

    def test_square_64(self):
        mesh = build_initial_mesh("square", 64)
        assert mesh.n_triangles == 64
        assert np.isclose(mesh.total_area(), 0.25, rtol=1e-12)

    def test_square_two_triangles(self):
        mesh = build_initial_mesh("square", 2)
        assert mesh.n_triangles == 2
        assert np.isclose(mesh.total_area(), 0.25, rtol=1e-12)

    def test_unknown_domain(self):
        with pytest.raises(ValueError):
            build_initial_mesh("disk", 48)

    def test_unachievable_count(self):
        with pytest.raises(ValueError):
            build_initial_mesh("lshape", 50)
        with pytest.raises(ValueError):
            build_initial_mesh("square", 7)

    def test_alignment_with_axes(self):
        # the ex3 discontinuity lines x1=0 and x2=0 must carry edges only
        mesh = build_initial_mesh("lshape", 48)
        for t in range(mesh.n_triangles):
            p = mesh.vertices[mesh.triangles[t]]
            assert np.all(p[:, 0] >= -1e-12) or np.all(p[:, 0] <= 1e-12)
            assert np.all(p[:, 1] >= -1e-12) or np.all(p[:, 1] <= 1e-12)

    def test_square_interface_alignment(self):
        # ex2 jump line x2 = 0.25 must not cross element interiors
        mesh = build_initial_mesh("square", 64)
        p = mesh.vertices[mesh.triangles]
        above = p[:, :, 1] >= 0.25 - 1e-12
        below = p[:, :, 1] <= 0.25 + 1e-12
        assert np.all(np.all(above, axis=1) | np.all(below, axis=1))


class TestShapeRegularity:
    def test_equilateral(self):
        s = 1.0
        verts = np.array([[0, 0], [s, 0], [s / 2, s * np.sqrt(3) / 2]])
        mesh = Mesh(verts, np.array([[0, 1, 2]]))
        assert np.isclose(shape_regularity(mesh), np.sqrt(3), rtol=1e-12)

    def test_right_isosceles(self):
        verts = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
        mesh = Mesh(verts, np.array([[0, 1, 2]]))
        expected = np.sqrt(2) / (2 - np.sqrt(2))
        assert np.isclose(shape_regularity(mesh), expected, rtol=1e-12)

    def test_constant_under_uniform_refinement(self):
        mesh = build_initial_mesh("square", 16)
        sigma0 = shape_regularity(mesh)
        for _ in range(3):
            mesh, _ = refine_rgb(mesh, np.arange(mesh.n_triangles))
            assert np.isclose(shape_regularity(mesh), sigma0, rtol=1e-12)


class TestRefinement:
    def test_uniform_red_two_triangles(self):
        mesh = unit_square_two()
        refined, parent = refine_rgb(mesh, [0, 1])
        assert refined.n_triangles == 8
        assert np.isclose(refined.total_area(), 1.0, rtol=1e-14)
        # children similar to parents: same shape-regularity ratio
        assert np.isclose(shape_regularity(refined), shape_regularity(mesh),
                          rtol=1e-12)
        assert len(parent) == 8
        assert set(parent) == {0, 1}

    def test_noop(self):
        mesh = unit_square_two()
        refined, parent = refine_rgb(mesh, [])
        assert refined is mesh
        assert np.array_equal(parent, [0, 1])

    def test_single_mark_conformity(self):
        mesh = build_initial_mesh("lshape", 48)
        refined, _ = refine_rgb(mesh, [0])
        assert_conforming(refined)
        assert np.isclose(refined.total_area(), mesh.total_area(),
                          rtol=1e-12)

    def test_repeated_local_refinement_keeps_angles(self):
        # refine toward the reentrant corner repeatedly
        mesh = build_initial_mesh("lshape", 48)
        a0 = mesh.min_angle()
        rng = np.random.default_rng(7)
        for _ in range(6):
            d = np.linalg.norm(mesh.barycenter, axis=1)
            marked = np.argsort(d)[: max(1, mesh.n_triangles // 10)]
            extra = rng.integers(0, mesh.n_triangles, size=3)
            mesh, _ = refine_rgb(mesh, np.concatenate([marked, extra]))
            assert_conforming(mesh)
            assert mesh.min_angle() >= 0.5 * a0 - 1e-12
        assert np.isclose(mesh.total_area(), polygon_area(LSHAPE_POLYGON),
                          rtol=1e-12)

    def test_marked_set_red_refined(self):
        mesh = build_initial_mesh("square", 16)
        refined, parent = refine_rgb(mesh, [3])
        # the marked triangle has exactly 4 children
        assert np.count_nonzero(parent == 3) == 4

    def test_boundary_cycle_consistency(self):
        mesh = build_initial_mesh("lshape", 48)
        for _ in range(2):
            mesh, _ = refine_rgb(mesh, np.arange(0, mesh.n_triangles, 3))
        pairs = mesh.boundary_pairs
        # closed single cycle
        assert np.array_equal(np.sort(pairs[:, 0]), np.sort(pairs[:, 1]))
        nxt = dict(pairs)
        node = pairs[0, 0]
        seen = set()
        for _ in range(len(pairs)):
            seen.add(node)
            node = nxt[node]
        assert node == pairs[0, 0] and len(seen) == len(pairs)
        # outward normals: midpoint + eps*n leaves the domain
        probe = mesh.boundary_mid + 1e-8 * mesh.boundary_normal
        from matplotlib.path import Path
        path = Path(mesh.polygon)
        assert not np.any(path.contains_points(probe))
        probe_in = mesh.boundary_mid - 1e-8 * mesh.boundary_normal
        assert np.all(path.contains_points(probe_in))

    def test_determinism(self):
        mesh1 = build_initial_mesh("lshape", 48)
        mesh2 = build_initial_mesh("lshape", 48)
        r1, _ = refine_rgb(mesh1, [5, 17, 30])
        r2, _ = refine_rgb(mesh2, [5, 17, 30])
        assert np.array_equal(r1.vertices, r2.vertices)
        assert np.array_equal(r1.triangles, r2.triangles)


class TestDump:
    def test_roundtrip(self, tmp_path):
        mesh = build_initial_mesh("square", 16)
        path = tmp_path / "mesh.txt"
        mesh.dump(path)
        text = path.read_text().splitlines()
        assert text[0] == "vertices %d triangles %d boundary_edges %d" % (
            mesh.n_vertices, mesh.n_triangles, len(mesh.boundary_edges))
        loaded = Mesh.load(path)
        assert np.allclose(loaded.vertices, mesh.vertices)
        assert np.array_equal(loaded.triangles, mesh.triangles)
