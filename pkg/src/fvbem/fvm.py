"""Vertex-centered finite volume assembly over the Donald boxes.

Row i of the system tests the equation with the indicator of box V_i:
fluxes of -A grad u_h + b u_h through the dual segments, the reaction
term over the box, and the convective outflow through the boundary part
of the box. Boundary columns couple to the exterior density through the
box halves of the boundary edges. Quadrature: two-point Gauss on dual
segments and boundary half-edges, a degree-2 rule on the two
sub-triangles of each box piece.
"""
import numpy as np
from scipy import sparse

from .quadrature import gauss_legendre
from .model import boundary_inflow_mask

# 2-point Gauss on [0,1]
_SEG_T, _SEG_W = gauss_legendre(2)

# barycentric coordinates along dual segment k (edge-k midpoint to the
# barycenter): lambda(t) = (1-t)*midpoint_k + t*(1/3,1/3,1/3)
_SEG_LAMBDA = np.zeros((3, len(_SEG_T), 3))
for _k in range(3):
    _mid = np.zeros(3)
    _mid[(_k + 1) % 3] = 0.5
    _mid[(_k + 2) % 3] = 0.5
    for _q, _t in enumerate(_SEG_T):
        _SEG_LAMBDA[_k, _q] = (1 - _t) * _mid + _t / 3.0

# degree-2 rule on the two sub-triangles (vertex v, edge midpoint, bary)
# of the box around local vertex v; 6 points per box, weight |T|/18 each
_BOX_LAMBDA = np.zeros((3, 6, 3))
for _v in range(3):
    ev = np.zeros(3)
    ev[_v] = 1.0
    m1 = np.zeros(3)  # midpoint of edge (v, v+1)
    m1[_v] = 0.5
    m1[(_v + 1) % 3] = 0.5
    m2 = np.zeros(3)  # midpoint of edge (v, v+2)
    m2[_v] = 0.5
    m2[(_v + 2) % 3] = 0.5
    c = np.full(3, 1.0 / 3.0)
    for _s, (pa, pb, pc) in enumerate(((ev, m1, c), (ev, c, m2))):
        for _q, (x, y) in enumerate(((pa, pb), (pb, pc), (pc, pa))):
            _BOX_LAMBDA[_v, 3 * _s + _q] = 0.5 * (x + y)


def shape_gradients(mesh):
    """Gradients of the three nodal hats per triangle, (nt, 3, 2)."""
    p = mesh.vertices[mesh.triangles]
    grads = np.empty((mesh.n_triangles, 3, 2))
    for k in range(3):
        e = p[:, (k + 2) % 3] - p[:, (k + 1) % 3]
        grads[:, k, 0] = -e[:, 1]
        grads[:, k, 1] = e[:, 0]
    grads /= (2.0 * mesh.tri_area)[:, None, None]
    return grads


def segment_quadrature(dual):
    """Gauss points and weights on all dual segments, (nt, 3, q, ...)."""
    start = dual.seg_start
    end = dual.seg_end[:, None, :]
    pts = (start[:, :, None, :]
           + _SEG_T[:, None] * (end - start)[:, :, None, :])
    wts = dual.seg_len[:, :, None] * _SEG_W
    return pts, wts


def box_quadrature(mesh):
    """Degree-2 points/weights on the box pieces, (nt, 3 boxes, 6, ...)."""
    p = mesh.vertices[mesh.triangles]  # (nt, 3, 2)
    pts = np.einsum("vqk,tkx->tvqx", _BOX_LAMBDA, p)
    wts = np.broadcast_to((mesh.tri_area / 18.0)[:, None, None],
                          (mesh.n_triangles, 3, 6))
    return pts, wts


def boundary_half_quadrature(mesh):
    """2-point Gauss on the boundary box halves.

    Returns (nodes, pts, wts, eta, normals, edge_idx): per boundary edge
    two halves [a, m] and [m, b]; eta carries the values of the two edge
    hats (a first) at the quadrature points.
    """
    a, b = mesh.boundary_pairs.T
    pa, pb = mesh.vertices[a], mesh.vertices[b]
    mid = 0.5 * (pa + pb)
    nb = len(a)
    nodes = np.concatenate([a, b])
    start = np.vstack([pa, mid])
    end = np.vstack([mid, pb])
    pts = start[:, None, :] + _SEG_T[:, None] * (end - start)[:, None, :]
    wts = (0.5 * np.concatenate([mesh.boundary_h, mesh.boundary_h]))[:, None] \
        * _SEG_W
    # arc parameter of the quadrature points along the full edge
    s = np.concatenate([0.5 * _SEG_T[None, :].repeat(nb, 0),
                        0.5 + 0.5 * _SEG_T[None, :].repeat(nb, 0)])
    eta = np.stack([1.0 - s, s], axis=-1)
    normals = np.vstack([mesh.boundary_normal, mesh.boundary_normal])
    edge_idx = np.concatenate([np.arange(nb), np.arange(nb)])
    return nodes, pts, wts, eta, normals, edge_idx


class UpwindTable:
    """Interface averages of b.n and the resulting upwind choices.

    beta[e] is the average of b.n_i over the full dual interface of
    primal edge e, with n_i pointing away from the smaller node index i;
    upwind_node[e] is the donor node (j if beta < 0, else i).
    """

    def __init__(self, mesh, dual, spec):
        pts, wts = segment_quadrature(dual)
        bvals = spec.b(pts)
        bn = np.sum(bvals * dual.seg_normal[:, :, None, :], axis=-1)
        seg_flux = np.sum(bn * wts, axis=-1)  # (nt, 3)

        ne = mesh.n_edges
        num = np.zeros(ne)
        den = np.zeros(ne)
        np.add.at(num, mesh.tri_edges.ravel(), seg_flux.ravel())
        np.add.at(den, mesh.tri_edges.ravel(), dual.seg_len.ravel())
        with np.errstate(invalid="ignore"):
            self.beta = np.where(den > 0, num / den, 0.0)
        self.interface_length = den
        i = mesh.edges[:, 0]
        j = mesh.edges[:, 1]
        self.upwind_node = np.where(self.beta < 0.0, j, i)
        self.seg_flux = seg_flux


class FvmSystem:
    def __init__(self, A_V, C, rhs_f, rhs_t0, upwind, upwind_table=None):
        self.A_V = A_V
        self.C = C
        self.rhs_f = rhs_f
        self.rhs_t0 = rhs_t0
        self.upwind = upwind
        self.upwind_table = upwind_table

    @property
    def n_nodes(self):
        return self.A_V.shape[0]

    @property
    def n_boundary_edges(self):
        return self.C.shape[1]


def _assemble_interior(mesh, dual, spec, upwind):
    """COO triplets of the flux + reaction + outflow parts of A_V."""
    n = mesh.n_vertices
    grads = shape_gradients(mesh)
    pts, wts = segment_quadrature(dual)
    normals = dual.seg_normal

    amat = spec.diffusion.matrix(pts)  # (nt, 3, q, 2, 2)
    a_grad = np.einsum("tkqxy,tdy->tkqdx", amat, grads)
    diff_flux = -np.einsum("tkqdx,tkx->tkqd", a_grad, normals)
    flux_coeff = np.einsum("tkqd,tkq->tkd", diff_flux, wts)

    rows, cols, vals = [], [], []
    pair_i = dual.seg_pair[:, :, 0]
    pair_j = dual.seg_pair[:, :, 1]
    dofs = np.broadcast_to(mesh.triangles[:, None, :], flux_coeff.shape)

    def scatter(rmat, cmat, vmat):
        rows.append(np.asarray(rmat).ravel())
        cols.append(np.asarray(cmat).ravel())
        vals.append(np.asarray(vmat).ravel())

    scatter(np.broadcast_to(pair_i[:, :, None], flux_coeff.shape), dofs,
            flux_coeff)
    scatter(np.broadcast_to(pair_j[:, :, None], flux_coeff.shape), dofs,
            -flux_coeff)

    if not spec.zero_convection:
        bn = np.sum(spec.b(pts) * normals[:, :, None, :], axis=-1)
        if upwind is None:
            conv = np.einsum("tkq,kqd,tkq->tkd", bn, _SEG_LAMBDA, wts)
            scatter(np.broadcast_to(pair_i[:, :, None], conv.shape), dofs,
                    conv)
            scatter(np.broadcast_to(pair_j[:, :, None], conv.shape), dofs,
                    -conv)
        else:
            seg_flux = np.sum(bn * wts, axis=-1)  # (nt, 3)
            donor = upwind.upwind_node[mesh.tri_edges]  # (nt, 3)
            scatter(pair_i, donor, seg_flux)
            scatter(pair_j, donor, -seg_flux)

    # reaction over the box pieces
    cpts, cwts = box_quadrature(mesh)
    cvals = spec.c(cpts)
    if np.any(cvals):
        # hat values at the box points are their barycentric coordinates
        react = np.einsum("tvq,vqd,tvq->tvd", cvals, _BOX_LAMBDA, cwts)
        box_rows = np.broadcast_to(mesh.triangles[:, :, None], react.shape)
        box_cols = np.broadcast_to(mesh.triangles[:, None, :], react.shape)
        scatter(box_rows, box_cols, react)

    # convective outflow through the boundary halves
    if not spec.zero_convection:
        outflow = ~boundary_inflow_mask(spec, mesh.boundary_mid,
                                        mesh.boundary_normal)
        nodes, hpts, hwts, eta, hnorm, edge_idx = \
            boundary_half_quadrature(mesh)
        keep = outflow[edge_idx]
        if np.any(keep):
            bn = np.sum(spec.b(hpts[keep]) * hnorm[keep][:, None, :],
                        axis=-1)
            coeff = np.einsum("hq,hqd,hq->hd", bn, eta[keep],
                              hwts[keep])
            e = edge_idx[keep]
            edge_nodes = mesh.boundary_pairs[e]  # (h, 2)
            scatter(np.broadcast_to(nodes[keep][:, None], coeff.shape),
                    edge_nodes, coeff)

    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    vals = np.concatenate(vals)
    return sparse.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()


def assemble_AV(mesh, dual, spec):
    """Central (unstabilized) finite volume matrix and load vectors."""
    A = _assemble_interior(mesh, dual, spec, upwind=None)
    C = assemble_coupling(mesh)
    rhs_f, rhs_t0 = assemble_load(mesh, dual, spec)
    return FvmSystem(A, C, rhs_f, rhs_t0, upwind=False)


def assemble_AV_up(mesh, dual, spec):
    """Full-upwind finite volume matrix and load vectors."""
    table = UpwindTable(mesh, dual, spec)
    A = _assemble_interior(mesh, dual, spec, upwind=table)
    C = assemble_coupling(mesh)
    rhs_f, rhs_t0 = assemble_load(mesh, dual, spec)
    return FvmSystem(A, C, rhs_f, rhs_t0, upwind=True, upwind_table=table)


def assemble_coupling(mesh):
    """Coupling matrix <phi_h, box indicator>: h_E/2 per endpoint."""
    n = mesh.n_vertices
    nb = len(mesh.boundary_edges)
    a, b = mesh.boundary_pairs.T
    rows = np.concatenate([a, b])
    cols = np.concatenate([np.arange(nb), np.arange(nb)])
    vals = np.concatenate([0.5 * mesh.boundary_h, 0.5 * mesh.boundary_h])
    return sparse.coo_matrix((vals, (rows, cols)), shape=(n, nb)).tocsr()


def assemble_load(mesh, dual, spec):
    """Load vectors against the box indicators: volume f and boundary t0."""
    n = mesh.n_vertices
    pts, wts = box_quadrature(mesh)
    fvals = spec.f(pts)
    rhs_f = np.zeros(n)
    np.add.at(rhs_f, mesh.triangles.ravel(),
              np.sum(fvals * wts, axis=-1).ravel())

    rhs_t0 = np.zeros(n)
    nodes, hpts, hwts, _, hnorm, _ = boundary_half_quadrature(mesh)
    tvals = spec.t0(hpts, hnorm[:, None, :])
    np.add.at(rhs_t0, nodes, np.sum(tvals * hwts, axis=-1))
    return rhs_f, rhs_t0
