"""Boundary element machinery for the 2D Laplace layer operators.

The single layer kernel is G(z) = -log|z| / (2 pi); the double layer
kernel is its normal derivative with respect to the source point. All
segment integrals reduce to closed forms in atan and log; Galerkin
entries use those closed forms inside and Gauss quadrature outside, with
the outer order escalating as edge pairs approach each other and a
geometrically graded rule for edges that share an endpoint.
"""
import numpy as np

from .quadrature import gauss_legendre

TWO_PI = 2.0 * np.pi


class BoundaryMesh:
    """Closed polygonal boundary as an ordered cycle of edges.

    Edge k runs from node k to node k+1 (mod m) with the domain on the
    left, so the stored normals point out of the domain.
    """

    def __init__(self, points, mesh_edge_indices=None, node_ids=None,
                 adjacent_tri=None):
        pts = np.asarray(points, dtype=float)
        if len(pts) < 3:
            raise ValueError("boundary needs at least 3 nodes")
        x, y = pts.T
        if 0.5 * np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y) < 0:
            raise ValueError("boundary cycle must be counterclockwise")
        self.points = pts
        self.a = pts
        self.b = np.roll(pts, -1, axis=0)
        tang = self.b - self.a
        self.h = np.linalg.norm(tang, axis=1)
        if np.any(self.h <= 0):
            raise ValueError("degenerate boundary edge")
        self.tangent = tang / self.h[:, None]
        self.normal = np.column_stack([self.tangent[:, 1],
                                       -self.tangent[:, 0]])
        self.midpoint = 0.5 * (self.a + self.b)
        self.mesh_edge_indices = mesh_edge_indices
        self.node_ids = node_ids
        self.adjacent_tri = adjacent_tri

    @classmethod
    def from_mesh(cls, mesh):
        node_ids = mesh.boundary_pairs[:, 0]
        return cls(mesh.vertices[node_ids],
                   mesh_edge_indices=mesh.boundary_edges,
                   node_ids=node_ids,
                   adjacent_tri=mesh.boundary_tri)

    @property
    def n_edges(self):
        return len(self.a)

    def total_length(self):
        return self.h.sum()

    def refine(self, factor):
        """Uniformly split every edge into 2**factor equal parts.

        Returns (fine_boundary, parent) with parent mapping fine edges to
        their coarse edge.
        """
        k = 2 ** factor
        t = np.arange(k) / k
        pts = (self.a[:, None, :]
               + t[:, None] * (self.b - self.a)[:, None, :])
        parent = np.repeat(np.arange(self.n_edges), k)
        return BoundaryMesh(pts.reshape(-1, 2)), parent

    def locate(self, x, tol=1e-9):
        """Edge index and parameter of a point on the boundary."""
        x = np.asarray(x, float)
        w = x - self.a
        t = np.clip(np.sum(w * self.tangent, axis=1) / self.h, 0.0, 1.0)
        proj = self.a + (t * self.h)[:, None] * self.tangent
        d = np.linalg.norm(proj - x, axis=1)
        e = int(np.argmin(d))
        if d[e] > tol * max(1.0, self.h[e]):
            raise ValueError("point %s not on the boundary" % (x,))
        return e, float(t[e])

    def trace_values(self, nodal_field):
        """Nodal values of a global field restricted to the boundary."""
        if self.node_ids is None:
            raise ValueError("boundary mesh is not linked to a mesh")
        return np.asarray(nodal_field)[self.node_ids]


# ----------------------------------------------------------------------
# closed-form segment integrals (broadcast over leading axes)
# ----------------------------------------------------------------------
def _segment_frame(x, p, q):
    d = q - p
    h = np.linalg.norm(d, axis=-1)
    that = d / h[..., None]
    w = x - p
    a = np.sum(w * that, axis=-1)
    delta = w[..., 0] * that[..., 1] - w[..., 1] * that[..., 0]
    # delta is the signed distance with respect to the -90 deg rotation
    # of the tangent, i.e. the outward normal of a ccw boundary edge
    return h, a, delta


def log_segment_integral(x, p, q):
    """Integral of log|x - y| over the segment [p, q] in y."""
    h, a, delta = _segment_frame(np.asarray(x, float),
                                 np.asarray(p, float), np.asarray(q, float))
    e2 = delta * delta

    def antiderivative(tau):
        r2 = tau * tau + e2
        safe = np.maximum(r2, 1e-300)
        val = 0.5 * tau * np.log(safe) - tau
        val = np.where(r2 > 0, val, 0.0)
        ad = np.abs(delta)
        at = np.where(ad > 0, ad * np.arctan2(tau, ad), 0.0)
        return val + at

    return antiderivative(h - a) - antiderivative(-a)


def dl_segment_integrals(x, p, q):
    """Double layer integrals over the segment [p, q].

    Returns (j0, j1) with j0 the subtended-angle integral of
    (x - y).n / |x - y|^2, n the outward normal of a ccw edge, and j1 the
    same integral weighted by the hat function rising from p to q.
    """
    h, a, delta = _segment_frame(np.asarray(x, float),
                                 np.asarray(p, float), np.asarray(q, float))
    tau1 = -a
    tau2 = h - a
    # points on the segment's own line carry roundoff-level delta (below
    # 1e-15 h for points built from the endpoints); the kernel vanishes
    # there, so snap it to zero instead of feeding the atan a near-zero
    # denominator
    nonzero = np.abs(delta) > 1e-14 * h
    dsafe = np.where(nonzero, delta, 1.0)
    j0 = np.where(nonzero,
                  np.arctan(tau2 / dsafe) - np.arctan(tau1 / dsafe), 0.0)
    r1 = tau1 * tau1 + delta * delta
    r2 = tau2 * tau2 + delta * delta
    ratio = np.log(np.maximum(r2, 1e-300) / np.maximum(r1, 1e-300))
    j1 = np.where(nonzero, (delta / h) * 0.5 * ratio + (a / h) * j0, 0.0)
    return j0, j1


def single_layer_potential(bmesh, phi, x):
    """(V phi)(x) for an edgewise-constant density phi."""
    x = np.asarray(x, float)
    pts = x.reshape(-1, 1, 2)
    s = log_segment_integral(pts, bmesh.a, bmesh.b)
    out = -(s @ np.asarray(phi)) / TWO_PI
    return out.reshape(x.shape[:-1])


def double_layer_potential(bmesh, theta, x):
    """(K theta)(x) for a nodal P1 density theta on the boundary.

    For x on the flat part of an edge this is the principal value; the
    own-edge kernel vanishes identically there.
    """
    x = np.asarray(x, float)
    theta = np.asarray(theta, float)
    pts = x.reshape(-1, 1, 2)
    j0, j1 = dl_segment_integrals(pts, bmesh.a, bmesh.b)
    theta_a = theta
    theta_b = np.roll(theta, -1)
    vals = (j0 - j1) @ theta_a + j1 @ theta_b
    return (vals / TWO_PI).reshape(x.shape[:-1])


def gauss_integral(bmesh, x):
    """Sum of subtended angles / 2 pi: -1 inside, 0 outside the domain."""
    x = np.asarray(x, float)
    pts = x.reshape(-1, 1, 2)
    j0, _ = dl_segment_integrals(pts, bmesh.a, bmesh.b)
    return (j0.sum(axis=1) / TWO_PI).reshape(x.shape[:-1])


# ----------------------------------------------------------------------
# Galerkin matrices
# ----------------------------------------------------------------------
def _graded_rule(levels=24, ratio=0.25, order=8):
    """Composite Gauss nodes on [0, 1] graded toward 0."""
    gx, gw = gauss_legendre(order)
    nodes, weights = [], []
    right = 1.0
    for _ in range(levels):
        left = right * ratio
        nodes.append(left + (right - left) * gx)
        weights.append((right - left) * gw)
        right = left
    nodes.append(right * gx)
    weights.append(right * gw)
    return np.concatenate(nodes), np.concatenate(weights)


def _point_segment_distance(p, a, b):
    d = b - a
    h2 = np.sum(d * d, axis=-1)
    t = np.clip(np.sum((p - a) * d, axis=-1) / h2, 0.0, 1.0)
    proj = a + t[..., None] * d
    return np.linalg.norm(proj - p, axis=-1)


def _pair_classes(bmesh, iu, ju):
    """Group ordered edge pairs by the gap relative to the outer length.

    The outer Gauss order must grow as the inner edge approaches the
    outer one; pairs closer than 30% of the outer edge length (this
    includes pairs sharing a vertex) get a rule graded toward the outer
    endpoint nearest to the inner edge. Boundaries whose edges nearly
    touch away from their endpoints (near-self-intersecting spikes) are
    outside this scheme.
    """
    a, b = bmesh.a, bmesh.b
    gap_a = np.empty(len(iu))
    gap_b = np.empty(len(iu))
    gap_rev = np.empty(len(iu))
    for lo in range(0, len(iu), _CHUNK):
        s = slice(lo, lo + _CHUNK)
        gap_a[s] = _point_segment_distance(a[iu[s]], a[ju[s]], b[ju[s]])
        gap_b[s] = _point_segment_distance(b[iu[s]], a[ju[s]], b[ju[s]])
        gap_rev[s] = np.minimum(
            _point_segment_distance(a[ju[s]], a[iu[s]], b[iu[s]]),
            _point_segment_distance(b[ju[s]], a[iu[s]], b[iu[s]]))
    gap = np.minimum(np.minimum(gap_a, gap_b), gap_rev)
    q = gap / bmesh.h[iu]
    graded = q < 0.3
    near = ~graded & (q < 2.0)
    mid = ~graded & ~near & (q < 8.0)
    far = ~(graded | near | mid)
    grade_at_start = gap_a <= gap_b
    return graded, near, mid, far, grade_at_start


def _outer_points(bmesh, idx, t, w):
    pa = bmesh.a[idx]
    d = bmesh.b[idx] - pa
    pts = pa[:, None, :] + t[None, :, None] * d[:, None, :]
    return pts, bmesh.h[idx][:, None] * w[None, :]


def _graded_outer(bmesh, iu, grade_at_start, levels, order):
    """Outer nodes on edges iu graded toward the nearer endpoint."""
    t, w = _graded_rule(levels=levels, order=order)
    tt = np.where(grade_at_start[:, None], t[None, :], 1.0 - t[None, :])
    pa = bmesh.a[iu]
    d = bmesh.b[iu] - pa
    pts = pa[:, None, :] + tt[:, :, None] * d[:, None, :]
    return pts, bmesh.h[iu][:, None] * w[None, :]


_CHUNK = 1 << 19


def assemble_V(bmesh, far_order=4, mid_order=12, near_order=24,
               graded_levels=24, graded_order=12):
    """Galerkin matrix of the single layer operator on P0 edge functions."""
    m = bmesh.n_edges
    V = np.zeros((m, m))
    h = bmesh.h
    V[np.arange(m), np.arange(m)] = h * h / TWO_PI * (1.5 - np.log(h))

    iu, ju = np.triu_indices(m, k=1)
    graded, near, mid, far, grade_at_start = _pair_classes(bmesh, iu, ju)

    def fill(mask, order):
        idx = np.where(mask)[0]
        t, w = gauss_legendre(order)
        for lo in range(0, len(idx), max(1, _CHUNK // order)):
            sel = idx[lo:lo + max(1, _CHUNK // order)]
            pts, wts = _outer_points(bmesh, iu[sel], t, w)
            s = log_segment_integral(pts, bmesh.a[ju[sel]][:, None, :],
                                     bmesh.b[ju[sel]][:, None, :])
            V[iu[sel], ju[sel]] = -np.sum(s * wts, axis=1) / TWO_PI

    fill(far, far_order)
    fill(mid, mid_order)
    fill(near, near_order)

    idx = np.where(graded)[0]
    if len(idx):
        pts, wts = _graded_outer(bmesh, iu[idx], grade_at_start[idx],
                                 graded_levels, graded_order)
        s = log_segment_integral(pts, bmesh.a[ju[idx]][:, None, :],
                                 bmesh.b[ju[idx]][:, None, :])
        V[iu[idx], ju[idx]] = -np.sum(s * wts, axis=1) / TWO_PI

    V[ju, iu] = V[iu, ju]
    return V


def assemble_K(bmesh, far_order=4, mid_order=12, near_order=24,
               graded_levels=24, graded_order=12):
    """Galerkin matrix of the double layer operator against P1 hats.

    Entry (E, a) integrates over E the potential of the hat at boundary
    node a. Coincident edge pairs vanish (the kernel is zero along a
    straight segment).
    """
    m = bmesh.n_edges
    K = np.zeros((m, m))

    rows = np.repeat(np.arange(m), m)
    cols = np.tile(np.arange(m), m)
    off = rows != cols
    rows, cols = rows[off], cols[off]
    graded, near, mid, far, grade_at_start = _pair_classes(bmesh, rows, cols)

    def accumulate(sel, pts, wts):
        r, c = rows[sel], cols[sel]
        j0, j1 = dl_segment_integrals(pts, bmesh.a[c][:, None, :],
                                      bmesh.b[c][:, None, :])
        k_lo = np.sum((j0 - j1) * wts, axis=1) / TWO_PI
        k_hi = np.sum(j1 * wts, axis=1) / TWO_PI
        np.add.at(K, (r, c), k_lo)
        np.add.at(K, (r, (c + 1) % m), k_hi)

    def fill(mask, order):
        idx = np.where(mask)[0]
        t, w = gauss_legendre(order)
        for lo in range(0, len(idx), max(1, _CHUNK // order)):
            sel = idx[lo:lo + max(1, _CHUNK // order)]
            pts, wts = _outer_points(bmesh, rows[sel], t, w)
            accumulate(sel, pts, wts)

    fill(far, far_order)
    fill(mid, mid_order)
    fill(near, near_order)

    idx = np.where(graded)[0]
    if len(idx):
        pts, wts = _graded_outer(bmesh, rows[idx], grade_at_start[idx],
                                 graded_levels, graded_order)
        accumulate(idx, pts, wts)
    return K


def assemble_M_half(bmesh):
    """Matrix of the half-identity term <psi_E, eta_a / 2>."""
    m = bmesh.n_edges
    M = np.zeros((m, m))
    idx = np.arange(m)
    M[idx, idx] = bmesh.h / 4.0
    M[idx, (idx + 1) % m] = bmesh.h / 4.0
    return M


class LayerMatrices:
    """Assembled boundary operator blocks for one boundary mesh."""

    def __init__(self, bmesh, **quad_options):
        self.bmesh = bmesh
        self.V_mat = assemble_V(bmesh, **quad_options)
        self.K_mat = assemble_K(bmesh, **quad_options)
        self.M_half = assemble_M_half(bmesh)

    @property
    def half_minus_K(self):
        return self.M_half - self.K_mat

    def dump(self, path):
        with open(path, "w") as fh:
            for name, mat in (("V", self.V_mat), ("K", self.K_mat),
                              ("M_half", self.M_half)):
                fh.write("%s %d %d\n" % (name, *mat.shape))
                np.savetxt(fh, mat, fmt="%.17g")


# ----------------------------------------------------------------------
# pointwise boundary/exterior evaluation
# ----------------------------------------------------------------------
def eval_boundary_residual(bmesh, u_h_trace, u0_nodes, phi, x,
                           edge=None, t=None):
    """The boundary integral residual w = (1/2 - K)(u0 - u_h) - V phi at x.

    x must lie on the boundary away from nodes; edge/t may pass the known
    location of x to skip the search.
    """
    rho = np.asarray(u0_nodes, float) - np.asarray(u_h_trace, float)
    x = np.asarray(x, float)
    if edge is None:
        edge, t = bmesh.locate(x)
    if min(t, 1.0 - t) * bmesh.h[edge] < 1e-12:
        raise ValueError("evaluation point too close to a boundary node")
    rho_x = (1.0 - t) * rho[edge] + t * rho[(edge + 1) % bmesh.n_edges]
    k_val = double_layer_potential(bmesh, rho, x)
    v_val = single_layer_potential(bmesh, phi, x)
    return 0.5 * rho_x - k_val - v_val


def boundary_residual_quotients(bmesh, u_h_trace, u0_nodes, phi,
                                stencil=20.0):
    """Central difference of w along every edge, |x2 - x1| = h_E / s.

    Returns the arc-length difference quotients as an array over edges;
    this is the building block of the tangential indicator term.
    """
    rho = np.asarray(u0_nodes, float) - np.asarray(u_h_trace, float)
    m = bmesh.n_edges
    step = bmesh.h / stencil
    t1 = 0.5 - 0.5 / stencil
    t2 = 0.5 + 0.5 / stencil
    x1 = bmesh.a + (t1 * bmesh.h)[:, None] * bmesh.tangent
    x2 = bmesh.a + (t2 * bmesh.h)[:, None] * bmesh.tangent
    pts = np.vstack([x1, x2])
    k_val = double_layer_potential(bmesh, rho, pts)
    v_val = single_layer_potential(bmesh, phi, pts)
    rho_b = np.roll(rho, -1)
    rho_x = np.concatenate([(1 - t1) * rho + t1 * rho_b,
                            (1 - t2) * rho + t2 * rho_b])
    w = 0.5 * rho_x - k_val - v_val
    return (w[m:] - w[:m]) / step


def arc_derivative(w, bmesh, edge, stencil=20.0):
    """Central difference quotient of a callable w about an edge midpoint."""
    h = bmesh.h[edge]
    t1 = 0.5 - 0.5 / stencil
    t2 = 0.5 + 0.5 / stencil
    x1 = bmesh.a[edge] + t1 * h * bmesh.tangent[edge]
    x2 = bmesh.a[edge] + t2 * h * bmesh.tangent[edge]
    return (w(x2) - w(x1)) / (h / stencil)


def eval_exterior(bmesh, u_h_trace, u0_nodes, phi, a_inf, x):
    """Exterior solution via the representation formula.

    Double layer potential of the exterior trace u_h - u0 minus the
    single layer potential of phi, plus the far-field constant a_inf.
    x must lie strictly outside the closed domain.
    """
    x = np.asarray(x, float)
    pts = x.reshape(-1, 2)
    inside = gauss_integral(bmesh, pts) < -0.25
    if np.any(inside):
        raise ValueError("evaluation point inside the domain")
    rho_ext = np.asarray(u_h_trace, float) - np.asarray(u0_nodes, float)
    val = (double_layer_potential(bmesh, rho_ext, pts)
           - single_layer_potential(bmesh, phi, pts) + a_inf)
    return val.reshape(x.shape[:-1])
