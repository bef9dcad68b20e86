"""Coupled block system of the interior finite volume scheme and the
boundary integral equation, and its direct solution.

Unknowns are the nodal values of u_h, the edgewise exterior conormal
density phi_h, and (for the constant-radiation variant) one far-field
degree of freedom. The system is non-symmetric; a sparse LU
factorization with iterative refinement keeps the residual near machine
precision.
"""
import numpy as np
from scipy import sparse
from scipy.sparse.linalg import splu


class DiscreteSolution:
    """Coefficients of the coupled discrete solution.

    u: nodal values on the mesh; phi: edge values on the boundary mesh;
    a_inf: far-field constant (constant-radiation variant only, stored
    so that it equals the limit of the exterior solution at infinity);
    residual_norm: relative linear-algebra residual of the solve.
    """

    def __init__(self, u, phi, a_inf, residual_norm, block2_residual,
                 upwind):
        self.u = u
        self.phi = phi
        self.a_inf = a_inf
        self.residual_norm = residual_norm
        self.block2_residual = block2_residual
        self.upwind = upwind

    def dump(self, path):
        with open(path, "w") as fh:
            fh.write("u %d\n" % len(self.u))
            for v in self.u:
                fh.write("%.17g\n" % v)
            fh.write("phi %d\n" % len(self.phi))
            for v in self.phi:
                fh.write("%.17g\n" % v)
            if self.a_inf is not None:
                fh.write("a_inf %.17g\n" % self.a_inf)


class CoupledSystem:
    def __init__(self, matrix, rhs, n_nodes, n_edges, boundary_node_ids,
                 scaled, upwind):
        self.matrix = matrix
        self.rhs = rhs
        self.n_nodes = n_nodes
        self.n_edges = n_edges
        self.boundary_node_ids = boundary_node_ids
        self.scaled = scaled
        self.upwind = upwind


def _block2_matrix(layers, n_nodes):
    """Boundary-equation rows: (M/2 - K) on trace nodes, V on densities."""
    bmesh = layers.bmesh
    m = bmesh.n_edges
    half_minus_K = layers.half_minus_K
    rows = np.repeat(np.arange(m), m)
    cols = np.tile(bmesh.node_ids, m)
    B_u = sparse.coo_matrix((half_minus_K.ravel(), (rows, cols)),
                            shape=(m, n_nodes)).tocsr()
    return B_u


def assemble_system(fvm, layers, spec):
    """Block matrix [[A_V, -C], [M/2 - K, V]] and its right-hand side."""
    bmesh = layers.bmesh
    n = fvm.n_nodes
    m = fvm.n_boundary_edges
    if m != bmesh.n_edges:
        raise ValueError("boundary dimensions do not match")
    if spec.radiation == "constant":
        return assemble_system_scaled(fvm, layers, spec)

    B_u = _block2_matrix(layers, n)
    top = sparse.hstack([fvm.A_V, -fvm.C], format="csr")
    bottom = sparse.hstack([B_u, sparse.csr_matrix(layers.V_mat)],
                           format="csr")
    matrix = sparse.vstack([top, bottom], format="csc")

    u0_nodes = spec.u0(bmesh.points)
    rhs = np.concatenate([fvm.rhs_f + fvm.rhs_t0,
                          layers.half_minus_K @ u0_nodes])
    return CoupledSystem(matrix, rhs, n, m, bmesh.node_ids,
                         scaled=False, upwind=fvm.upwind)


def assemble_system_scaled(fvm, layers, spec):
    """Variant with the far-field unknown and the density mean constraint.

    One extra column couples the boundary rows to the far-field degree
    of freedom with weight h_E, and one extra row enforces
    sum_E h_E phi_E = 0.
    """
    if spec.radiation != "constant":
        raise ValueError("scaled system requires the constant-radiation "
                         "variant")
    bmesh = layers.bmesh
    n = fvm.n_nodes
    m = fvm.n_boundary_edges

    B_u = _block2_matrix(layers, n)
    h_col = sparse.csr_matrix(bmesh.h.reshape(m, 1))
    zero_col = sparse.csr_matrix((n, 1))
    top = sparse.hstack([fvm.A_V, -fvm.C, zero_col], format="csr")
    bottom = sparse.hstack([B_u, sparse.csr_matrix(layers.V_mat), h_col],
                           format="csr")
    constraint = sparse.hstack(
        [sparse.csr_matrix((1, n)), sparse.csr_matrix(bmesh.h.reshape(1, m)),
         sparse.csr_matrix((1, 1))], format="csr")
    matrix = sparse.vstack([top, bottom, constraint], format="csc")

    u0_nodes = spec.u0(bmesh.points)
    rhs = np.concatenate([fvm.rhs_f + fvm.rhs_t0,
                          layers.half_minus_K @ u0_nodes, [0.0]])
    return CoupledSystem(matrix, rhs, n, m, bmesh.node_ids,
                         scaled=True, upwind=fvm.upwind)


def solve(system, refine_steps=3):
    """Direct sparse LU solve with iterative refinement.

    Raises a RuntimeError on a singular factorization, which indicates a
    modeling error such as a violated coerciveness assumption.
    """
    A = system.matrix.tocsc()
    try:
        lu = splu(A)
    except RuntimeError as exc:
        raise RuntimeError("singular coupled system: %s" % exc) from exc
    x = lu.solve(system.rhs)
    rhs_norm = np.linalg.norm(system.rhs)
    scale = rhs_norm if rhs_norm > 0 else 1.0
    for _ in range(refine_steps):
        r = system.rhs - A @ x
        if np.linalg.norm(r) <= 1e-14 * scale:
            break
        x = x + lu.solve(r)

    r = system.rhs - A @ x
    residual = np.linalg.norm(r) / scale
    n, m = system.n_nodes, system.n_edges
    block2 = np.linalg.norm(r[n:n + m]) / scale

    u = x[:n]
    phi = x[n:n + m]
    a_inf = None
    if system.scaled:
        # the raw unknown enters the boundary rows with +h_E; the
        # far-field limit of the exterior solution is its negative
        a_inf = -x[n + m]
    return DiscreteSolution(u, phi, a_inf, residual, block2,
                            upwind=system.upwind)


def solve_coupled(mesh, dual, spec, layers, upwind=False):
    """Assemble and solve in one step; returns (solution, fvm_system)."""
    from .fvm import assemble_AV, assemble_AV_up
    fvm = (assemble_AV_up if upwind else assemble_AV)(mesh, dual, spec)
    system = assemble_system(fvm, layers, spec)
    return solve(system), fvm
