"""Conforming triangulations with red-green refinement.

A mesh is immutable after construction; refinement produces a new mesh
together with a child-to-parent map. The two built-in domains are the
quarter-scale L-shape (-1/4,1/4)^2 \\ [0,1/4]x[-1/4,0] and the square
(0,1/2)^2; both are meshed by a criss-cross pattern so that coefficient
discontinuities along the coordinate axes fall on element edges.
"""
import numpy as np

LSHAPE_POLYGON = np.array([
    [-0.25, -0.25], [0.0, -0.25], [0.0, 0.0],
    [0.25, 0.0], [0.25, 0.25], [-0.25, 0.25],
])
SQUARE_POLYGON = np.array([
    [0.0, 0.0], [0.5, 0.0], [0.5, 0.5], [0.0, 0.5],
])

_DOMAIN_POLYGONS = {"lshape": LSHAPE_POLYGON, "square": SQUARE_POLYGON}


def polygon_area(poly):
    x, y = np.asarray(poly).T
    return 0.5 * np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y)


class MeshError(Exception):
    pass


class Mesh:
    """Triangle mesh with edge adjacency and an oriented boundary cycle.

    Attributes
    ----------
    vertices : (nv, 2) float array
    triangles : (nt, 3) int array, counterclockwise
    edges : (ne, 2) int array, each row sorted (i < j)
    edge_tris : (ne, 2) int array, adjacent triangles (-1 if boundary)
    tri_edges : (nt, 3) int array, edge index opposite local vertex k
    boundary_edges : (nb,) int array of edge indices in cycle order
    boundary_pairs : (nb, 2) int array, oriented so the domain lies left
    boundary_tri : (nb,) int array, the single adjacent triangle
    refinement_edge : (nt,) int array, local index of the longest edge
    """

    def __init__(self, vertices, triangles, polygon=None, domain_id=None):
        self.vertices = np.asarray(vertices, dtype=float)
        triangles = np.asarray(triangles, dtype=np.int64)
        self.polygon = None if polygon is None else np.asarray(polygon, float)
        self.domain_id = domain_id

        # enforce counterclockwise orientation
        p = self.vertices[triangles]
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        signed = 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])
        flip = signed < 0
        if np.any(flip):
            triangles = triangles.copy()
            triangles[flip, 1], triangles[flip, 2] = \
                triangles[flip, 2].copy(), triangles[flip, 1].copy()
            signed = np.abs(signed)
        if np.any(signed <= 0):
            raise MeshError("degenerate triangle (zero area)")
        self.triangles = triangles
        self.tri_area = signed

        self._build_edges()
        self._build_boundary_cycle()
        self._build_geometry()
        self._assign_refinement_edges()

    # ------------------------------------------------------------------
    # connectivity
    # ------------------------------------------------------------------
    def _build_edges(self):
        t = self.triangles
        # edge k is opposite local vertex k
        raw = np.stack([t[:, [1, 2]], t[:, [2, 0]], t[:, [0, 1]]], axis=1)
        raw = raw.reshape(-1, 2)
        canon = np.sort(raw, axis=1)
        edges, inverse = np.unique(canon, axis=0, return_inverse=True)
        self.edges = edges
        self.tri_edges = inverse.reshape(-1, 3)

        ne = len(edges)
        counts = np.bincount(inverse, minlength=ne)
        if counts.max() > 2:
            raise MeshError("edge shared by more than two triangles")
        edge_tris = np.full((ne, 2), -1, dtype=np.int64)
        tri_idx = np.repeat(np.arange(len(t)), 3)
        order = np.argsort(inverse, kind="stable")
        sorted_edges = inverse[order]
        sorted_tris = tri_idx[order]
        first = np.searchsorted(sorted_edges, np.arange(ne), side="left")
        edge_tris[:, 0] = sorted_tris[first]
        second_mask = counts == 2
        edge_tris[second_mask, 1] = sorted_tris[first[second_mask] + 1]
        self.edge_tris = edge_tris

    def _build_boundary_cycle(self):
        boundary = np.where(self.edge_tris[:, 1] < 0)[0]
        if len(boundary) == 0:
            raise MeshError("mesh has no boundary")
        # orient each boundary edge so the interior is on the left
        pairs = []
        for e in boundary:
            t = self.edge_tris[e, 0]
            tri = self.triangles[t]
            i, j = self.edges[e]
            # find the oriented occurrence within the ccw triangle
            loc = [(tri[k], tri[(k + 1) % 3]) for k in range(3)]
            if (i, j) in loc:
                pairs.append((i, j))
            else:
                pairs.append((j, i))
        pairs = np.array(pairs, dtype=np.int64)

        nxt = {a: (k, b) for k, (a, b) in enumerate(pairs)}
        if len(nxt) != len(pairs):
            raise MeshError("boundary is not a single cycle")
        start_node = pairs.min()
        order = []
        node = start_node
        for _ in range(len(pairs)):
            k, node2 = nxt[node]
            order.append(k)
            node = node2
        if node != start_node or len(set(order)) != len(pairs):
            raise MeshError("boundary is not a single closed cycle")
        order = np.array(order)
        self.boundary_edges = boundary[order]
        self.boundary_pairs = pairs[order]
        self.boundary_tri = self.edge_tris[self.boundary_edges, 0]

    def _build_geometry(self):
        p = self.vertices[self.triangles]
        self.barycenter = p.mean(axis=1)
        side = np.linalg.norm(
            p - np.roll(p, -1, axis=1), axis=2)  # side k = |v_k v_{k+1}|
        self.h_t = side.max(axis=1)
        self.perimeter = side.sum(axis=1)
        ev = self.vertices[self.edges]
        self.h_e = np.linalg.norm(ev[:, 1] - ev[:, 0], axis=1)
        self.edge_mid = 0.5 * (ev[:, 0] + ev[:, 1])

        a, b = self.boundary_pairs.T
        tang = self.vertices[b] - self.vertices[a]
        h = np.linalg.norm(tang, axis=1)
        tang = tang / h[:, None]
        # outward normal: rotate the ccw tangent by -90 degrees
        self.boundary_normal = np.column_stack([tang[:, 1], -tang[:, 0]])
        self.boundary_h = h
        self.boundary_mid = 0.5 * (self.vertices[a] + self.vertices[b])

    def _assign_refinement_edges(self):
        # longest edge; ties broken by the lowest (min index, max index) pair
        lengths = self.h_e[self.tri_edges]
        pairs = self.edges[self.tri_edges]  # (nt, 3, 2) already sorted rows
        nv = len(self.vertices)
        lmax = lengths.max(axis=1, keepdims=True)
        candidate = lengths >= lmax * (1.0 - 1e-12)
        pair_key = pairs[:, :, 0].astype(np.int64) * nv + pairs[:, :, 1]
        pair_key = np.where(candidate, pair_key, np.iinfo(np.int64).max)
        self.refinement_edge = np.argmin(pair_key, axis=1)

    # ------------------------------------------------------------------
    # queries
    # ------------------------------------------------------------------
    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_triangles(self):
        return len(self.triangles)

    @property
    def n_edges(self):
        return len(self.edges)

    def interior_edges(self):
        return np.where(self.edge_tris[:, 1] >= 0)[0]

    def total_area(self):
        return self.tri_area.sum()

    def inradius(self):
        return 2.0 * self.tri_area / self.perimeter

    def min_angle(self):
        p = self.vertices[self.triangles]
        angles = []
        for k in range(3):
            u = p[:, (k + 1) % 3] - p[:, k]
            v = p[:, (k + 2) % 3] - p[:, k]
            cosa = np.sum(u * v, axis=1) / (
                np.linalg.norm(u, axis=1) * np.linalg.norm(v, axis=1))
            angles.append(np.arccos(np.clip(cosa, -1.0, 1.0)))
        return np.min(angles)

    def dump(self, path):
        """Plain-text dump: header, vertices, triangles, boundary edges."""
        with open(path, "w") as fh:
            fh.write("vertices %d triangles %d boundary_edges %d\n"
                     % (self.n_vertices, self.n_triangles,
                        len(self.boundary_edges)))
            for x, y in self.vertices:
                fh.write("%.17g %.17g\n" % (x, y))
            for i, j, k in self.triangles:
                fh.write("%d %d %d\n" % (i, j, k))
            for a, b in self.boundary_pairs:
                fh.write("%d %d\n" % (a, b))

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            header = fh.readline().split()
            nv, nt = int(header[1]), int(header[3])
            verts = [list(map(float, fh.readline().split()))
                     for _ in range(nv)]
            tris = [list(map(int, fh.readline().split()))
                    for _ in range(nt)]
        return cls(np.array(verts), np.array(tris))


def shape_regularity(mesh):
    """Largest ratio of element diameter to twice the inradius."""
    return float(np.max(mesh.h_t / (2.0 * mesh.inradius())))


# ----------------------------------------------------------------------
# structured initial meshes
# ----------------------------------------------------------------------
def _crisscross(x0, y0, x1, y1, m, vertex_index, vertices, triangles):
    """Criss-cross m x m grid on [x0,x1]x[y0,y1]; 4 triangles per cell."""
    xs = np.linspace(x0, x1, m + 1)
    ys = np.linspace(y0, y1, m + 1)

    def node(x, y):
        key = (round(x, 12), round(y, 12))
        if key not in vertex_index:
            vertex_index[key] = len(vertices)
            vertices.append([x, y])
        return vertex_index[key]

    for i in range(m):
        for j in range(m):
            c = node(0.5 * (xs[i] + xs[i + 1]), 0.5 * (ys[j] + ys[j + 1]))
            v00 = node(xs[i], ys[j])
            v10 = node(xs[i + 1], ys[j])
            v11 = node(xs[i + 1], ys[j + 1])
            v01 = node(xs[i], ys[j + 1])
            triangles.append([v00, v10, c])
            triangles.append([v10, v11, c])
            triangles.append([v11, v01, c])
            triangles.append([v01, v00, c])


def build_initial_mesh(domain_id, target_elements):
    """Structured near-uniform mesh of a built-in polygonal domain.

    For the L-shape the admissible element counts are 12*m^2 (criss-cross
    with m x m cells per quadrant square); for the square they are 4*m^2,
    plus the minimal 2-triangle split along one diagonal.
    """
    if domain_id not in _DOMAIN_POLYGONS:
        raise ValueError("unknown domain tag %r" % (domain_id,))
    poly = _DOMAIN_POLYGONS[domain_id]

    vertices, triangles, index = [], [], {}
    if domain_id == "square":
        if target_elements == 2:
            return Mesh(np.array([[0.0, 0.0], [0.5, 0.0],
                                  [0.5, 0.5], [0.0, 0.5]]),
                        np.array([[0, 1, 2], [0, 2, 3]]),
                        polygon=poly, domain_id=domain_id)
        m = int(round(np.sqrt(target_elements / 4.0)))
        if 4 * m * m != target_elements or m < 1:
            raise ValueError(
                "element count %d not achievable on the square "
                "(needs 4*m^2 or 2)" % target_elements)
        _crisscross(0.0, 0.0, 0.5, 0.5, m, index, vertices, triangles)
    else:
        m = int(round(np.sqrt(target_elements / 12.0)))
        if 12 * m * m != target_elements or m < 1:
            raise ValueError(
                "element count %d not achievable on the L-shape "
                "(needs 12*m^2)" % target_elements)
        quads = [(-0.25, -0.25, 0.0, 0.0), (-0.25, 0.0, 0.0, 0.25),
                 (0.0, 0.0, 0.25, 0.25)]
        for x0, y0, x1, y1 in quads:
            _crisscross(x0, y0, x1, y1, m, index, vertices, triangles)
    return Mesh(np.array(vertices), np.array(triangles),
                polygon=poly, domain_id=domain_id)


# ----------------------------------------------------------------------
# red-green refinement
# ----------------------------------------------------------------------
def refine_rgb(mesh, marked):
    """Refine the marked triangles, closing the mesh so it stays conforming.

    Marked triangles are red-refined into four similar children. The
    closure marks the refinement edge of every triangle that has any
    marked edge, iterated to a fixpoint. Triangles then carry one marked
    edge (green bisection by the refinement edge), two (blue: bisect the
    refinement edge, then bisect the half holding the second marked
    edge), or three (red). Returns (new_mesh, parent) where parent[c] is
    the index of the parent triangle of child c.
    """
    marked = np.asarray(sorted(set(int(t) for t in marked)), dtype=np.int64)
    if len(marked) == 0:
        return mesh, np.arange(mesh.n_triangles)
    if marked.min() < 0 or marked.max() >= mesh.n_triangles:
        raise ValueError("marked set contains invalid triangle index")

    ref_edges = mesh.tri_edges[np.arange(mesh.n_triangles),
                               mesh.refinement_edge]
    edge_marked = np.zeros(mesh.n_edges, dtype=bool)
    edge_marked[mesh.tri_edges[marked].ravel()] = True
    while True:
        touched = edge_marked[mesh.tri_edges].any(axis=1)
        need = touched & ~edge_marked[ref_edges]
        if not np.any(need):
            break
        edge_marked[ref_edges[need]] = True

    nv = mesh.n_vertices
    vertices = [mesh.vertices]
    midpoint = np.full(mesh.n_edges, -1, dtype=np.int64)
    marked_edges = np.where(edge_marked)[0]
    midpoint[marked_edges] = nv + np.arange(len(marked_edges))
    vertices.append(mesh.edge_mid[marked_edges])
    vertices = np.vstack(vertices)

    new_tris = []
    parent = []
    cnt = edge_marked[mesh.tri_edges].sum(axis=1)
    for t in range(mesh.n_triangles):
        tri = mesh.triangles[t]
        if cnt[t] == 0:
            new_tris.append(tri)
            parent.append(t)
            continue
        mids = midpoint[mesh.tri_edges[t]]  # midpoint of edge opposite k
        if cnt[t] == 3:
            m0, m1, m2 = mids
            v0, v1, v2 = tri
            children = ([v0, m2, m1], [v1, m0, m2],
                        [v2, m1, m0], [m0, m1, m2])
        else:
            k = mesh.refinement_edge[t]
            mk = mids[k]
            vk, va, vb = tri[k], tri[(k + 1) % 3], tri[(k + 2) % 3]
            if cnt[t] == 1:
                children = ([vk, va, mk], [vk, mk, vb])
            else:
                # blue: one further bisection in the half that holds the
                # second marked edge (edge opposite va is (vb, vk), edge
                # opposite vb is (vk, va))
                ma = mids[(k + 1) % 3]
                mb = mids[(k + 2) % 3]
                if ma >= 0:
                    children = ([vk, va, mk], [mk, vb, ma], [mk, ma, vk])
                else:
                    children = ([vk, mb, mk], [mk, mb, va],
                                [vk, mk, vb])
        for child in children:
            new_tris.append(child)
            parent.append(t)

    refined = Mesh(vertices, np.array(new_tris, dtype=np.int64),
                   polygon=mesh.polygon, domain_id=mesh.domain_id)
    return refined, np.array(parent, dtype=np.int64)
