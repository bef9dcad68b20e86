"""Problem data: coefficients, sources, boundary jumps, exact solutions.

A ProblemSpec holds vectorized evaluators for the diffusion matrix A, the
convection field b, the reaction coefficient c, the volume source f and
the boundary jumps u0 (trace) and t0 (flux). All field callables accept
arrays of shape (..., 2) and return (...) for scalars, (..., 2) for
vectors and (..., 2, 2) for matrices.
"""
import numpy as np

from .mesh import LSHAPE_POLYGON, SQUARE_POLYGON, build_initial_mesh
from . import quadrature


class Diffusion:
    """Diffusion coefficient, either a scalar field alpha*I or a matrix.

    scalar(x) is None for genuinely matrix-valued coefficients; div(x)
    returns the row divergence used in the strong residual.
    """

    def __init__(self, matrix, div, scalar=None, lam_min=None,
                 subdomain=None, piecewise_constant=False):
        self.matrix = matrix
        self.div = div
        self.scalar = scalar
        self._lam_min = lam_min
        self.subdomain = subdomain
        self.piecewise_constant = piecewise_constant

    def lam_min(self, x):
        if self._lam_min is not None:
            return self._lam_min(x)
        m = self.matrix(x)
        tr = 0.5 * (m[..., 0, 0] + m[..., 1, 1])
        disc = np.sqrt((0.5 * (m[..., 0, 0] - m[..., 1, 1])) ** 2
                       + m[..., 0, 1] ** 2)
        return tr - disc

    @classmethod
    def from_scalar(cls, alpha, subdomain=None, piecewise_constant=True):
        """Piecewise-constant (per subdomain) scalar diffusion alpha*I."""
        def matrix(x):
            x = np.asarray(x, float)
            a = alpha(x)
            out = np.zeros(a.shape + (2, 2))
            out[..., 0, 0] = a
            out[..., 1, 1] = a
            return out

        def div(x):
            x = np.asarray(x, float)
            return np.zeros(x.shape)

        return cls(matrix, div, scalar=alpha, lam_min=alpha,
                   subdomain=subdomain,
                   piecewise_constant=piecewise_constant)


class ExactSolution:
    """Closed-form interior/exterior solution pair with derivatives."""

    def __init__(self, u, grad_u, hess_u, u_e, grad_u_e):
        self.u = u
        self.grad_u = grad_u
        self.hess_u = hess_u
        self.u_e = u_e
        self.grad_u_e = grad_u_e

    def phi(self, x, n):
        """Exterior conormal derivative du_e/dn."""
        return np.sum(self.grad_u_e(x) * n, axis=-1)


class ProblemSpec:
    def __init__(self, name, domain_id, polygon, diffusion, b, div_b, c,
                 f, u0, t0, radiation="log", exact=None, smooth_data=False,
                 zero_convection=False):
        self.name = name
        self.domain_id = domain_id
        self.polygon = np.asarray(polygon, float)
        self.diffusion = diffusion
        self.b = b
        self.div_b = div_b
        self.c = c
        self.f = f
        self.u0 = u0
        self.t0 = t0
        self.radiation = radiation
        self.exact = exact
        self.smooth_data = smooth_data
        self.zero_convection = zero_convection

    def coercivity_weight(self, x):
        """The nonnegative weight div(b)/2 + c in the energy seminorm."""
        return 0.5 * self.div_b(x) + self.c(x)


def classify_boundary(x, n, b):
    """'inflow' where b.n < 0, 'outflow' where b.n >= 0."""
    bn = np.sum(np.asarray(b(np.asarray(x, float))) * n, axis=-1)
    return np.where(bn < 0.0, "inflow", "outflow")


def boundary_inflow_mask(spec, midpoints, normals):
    bn = np.sum(spec.b(midpoints) * normals, axis=-1)
    return bn < 0.0


def derive_data_from_exact(spec):
    """Source f and jumps u0, t0 consistent with the exact solution.

    f = div(-A grad u + b u) + c u, u0 = u - u_e on the boundary, and
    t0 = (A grad u - [inflow] b u) . n - du_e/dn. Requires the spec's
    exact solution with two derivatives.
    """
    exact = spec.exact
    if exact is None or exact.hess_u is None:
        raise ValueError("no exact solution with second derivatives")
    diffusion, b, div_b, c = spec.diffusion, spec.b, spec.div_b, spec.c

    def f(x):
        x = np.asarray(x, float)
        g = exact.grad_u(x)
        h = exact.hess_u(x)
        m = diffusion.matrix(x)
        div_a_grad = (np.sum(diffusion.div(x) * g, axis=-1)
                      + np.einsum("...ij,...ij->...", m, h))
        u = exact.u(x)
        return (-div_a_grad + div_b(x) * u + np.sum(b(x) * g, axis=-1)
                + c(x) * u)

    def u0(x):
        x = np.asarray(x, float)
        return exact.u(x) - exact.u_e(x)

    def t0(x, n):
        x = np.asarray(x, float)
        n = np.asarray(n, float)
        flux = np.einsum("...ij,...j->...i", diffusion.matrix(x),
                         exact.grad_u(x))
        bn = np.sum(b(x) * n, axis=-1)
        conv = np.where(bn < 0.0, bn * exact.u(x), 0.0)
        return np.sum(flux * n, axis=-1) - conv - exact.phi(x, n)

    return f, u0, t0


# ----------------------------------------------------------------------
# built-in benchmark problems
# ----------------------------------------------------------------------
def _const_scalar(v):
    def f(x):
        x = np.asarray(x, float)
        return np.full(x.shape[:-1], float(v))
    return f


def _const_vector(vx, vy):
    def f(x):
        x = np.asarray(x, float)
        out = np.empty(x.shape)
        out[..., 0] = vx
        out[..., 1] = vy
        return out
    return f


def _zero_vector(x):
    x = np.asarray(x, float)
    return np.zeros(x.shape)


def _lshape_singular_exact():
    """Interior r^(2/3) sin(2 phi / 3) paired with a shifted log."""
    z = np.array([-0.125, 0.125])

    def polar(x):
        r = np.hypot(x[..., 0], x[..., 1])
        phi = np.arctan2(x[..., 1], x[..., 0])
        phi = np.where(phi < 0.0, phi + 2.0 * np.pi, phi)
        return r, phi

    def u(x):
        x = np.asarray(x, float)
        r, phi = polar(x)
        return r ** (2.0 / 3.0) * np.sin(2.0 * phi / 3.0)

    def grad_u(x):
        x = np.asarray(x, float)
        r, phi = polar(x)
        fac = (2.0 / 3.0) * r ** (-1.0 / 3.0)
        return np.stack([-fac * np.sin(phi / 3.0),
                         fac * np.cos(phi / 3.0)], axis=-1)

    def hess_u(x):
        x = np.asarray(x, float)
        r, phi = polar(x)
        fac = (2.0 / 9.0) * r ** (-4.0 / 3.0)
        uxx = fac * np.sin(4.0 * phi / 3.0)
        uxy = -fac * np.cos(4.0 * phi / 3.0)
        out = np.empty(x.shape[:-1] + (2, 2))
        out[..., 0, 0] = uxx
        out[..., 0, 1] = uxy
        out[..., 1, 0] = uxy
        out[..., 1, 1] = -uxx
        return out

    def u_e(x):
        x = np.asarray(x, float)
        d = x - z
        return 0.5 * np.log(d[..., 0] ** 2 + d[..., 1] ** 2)

    def grad_u_e(x):
        x = np.asarray(x, float)
        d = x - z
        return d / np.sum(d * d, axis=-1)[..., None]

    return ExactSolution(u, grad_u, hess_u, u_e, grad_u_e)


def _tanh_shock_exact():
    """Interior tanh shock at x1 = 0.25 paired with a centered log."""
    z = np.array([0.25, 0.25])
    width = 0.02

    def u(x):
        x = np.asarray(x, float)
        return 0.5 * (1.0 - np.tanh((0.25 - x[..., 0]) / width))

    def grad_u(x):
        x = np.asarray(x, float)
        g = (0.25 - x[..., 0]) / width
        out = np.zeros(x.shape)
        out[..., 0] = 0.5 / (width * np.cosh(g) ** 2)
        return out

    def hess_u(x):
        x = np.asarray(x, float)
        g = (0.25 - x[..., 0]) / width
        out = np.zeros(x.shape[:-1] + (2, 2))
        out[..., 0, 0] = np.tanh(g) / (width ** 2 * np.cosh(g) ** 2)
        return out

    def u_e(x):
        x = np.asarray(x, float)
        d = x - z
        return 0.5 * np.log(d[..., 0] ** 2 + d[..., 1] ** 2)

    def grad_u_e(x):
        x = np.asarray(x, float)
        d = x - z
        return d / np.sum(d * d, axis=-1)[..., None]

    return ExactSolution(u, grad_u, hess_u, u_e, grad_u_e)


def _problem_ex1():
    def matrix(x):
        x = np.asarray(x, float)
        out = np.empty(x.shape[:-1] + (2, 2))
        out[..., 0, 0] = 10.0 + np.cos(x[..., 0])
        out[..., 0, 1] = 160.0 * x[..., 0] * x[..., 1]
        out[..., 1, 0] = out[..., 0, 1]
        out[..., 1, 1] = 10.0 + np.sin(x[..., 1])
        return out

    def div(x):
        x = np.asarray(x, float)
        return np.stack([-np.sin(x[..., 0]) + 160.0 * x[..., 0],
                         160.0 * x[..., 1] + np.cos(x[..., 1])], axis=-1)

    diffusion = Diffusion(matrix, div)
    exact = _lshape_singular_exact()
    spec = ProblemSpec(
        "ex1", "lshape", LSHAPE_POLYGON, diffusion,
        b=_zero_vector, div_b=_const_scalar(0.0), c=_const_scalar(0.0),
        f=None, u0=None, t0=None, radiation="log", exact=exact,
        smooth_data=False, zero_convection=True)
    spec.f, spec.u0, spec.t0 = derive_data_from_exact(spec)
    return spec


def _problem_ex2(convection_factor=1000.0):
    def alpha(x):
        x = np.asarray(x, float)
        return np.where(x[..., 1] < 0.25, 0.42, 10.0)

    def subdomain(x):
        x = np.asarray(x, float)
        return np.where(x[..., 1] < 0.25, 0, 1)

    diffusion = Diffusion.from_scalar(alpha, subdomain=subdomain)
    fac = float(convection_factor)

    def b(x):
        x = np.asarray(x, float)
        out = np.zeros(x.shape)
        out[..., 0] = fac * x[..., 0]
        return out

    exact = _tanh_shock_exact()
    spec = ProblemSpec(
        "ex2", "square", SQUARE_POLYGON, diffusion,
        b=b, div_b=_const_scalar(fac), c=_const_scalar(0.0),
        f=None, u0=None, t0=None, radiation="log", exact=exact,
        smooth_data=False, zero_convection=(fac == 0.0))
    spec.f, spec.u0, spec.t0 = derive_data_from_exact(spec)
    spec.convection_factor = fac
    return spec


def _problem_ex3():
    def alpha(x):
        x = np.asarray(x, float)
        return np.where(x[..., 0] > 0.0, 0.5,
                        np.where(x[..., 1] <= 0.0, 10.0, 50.0))

    def subdomain(x):
        x = np.asarray(x, float)
        return np.where(x[..., 0] > 0.0, 0,
                        np.where(x[..., 1] <= 0.0, 1, 2))

    diffusion = Diffusion.from_scalar(alpha, subdomain=subdomain)

    def f(x):
        x = np.asarray(x, float)
        inside = ((x[..., 0] >= -0.2) & (x[..., 0] <= -0.1)
                  & (x[..., 1] >= -0.2) & (x[..., 1] <= -0.05))
        return np.where(inside, 50.0, 0.0)

    def t0(x, n):
        x = np.asarray(x, float)
        return np.zeros(x.shape[:-1])

    return ProblemSpec(
        "ex3", "lshape", LSHAPE_POLYGON, diffusion,
        b=_const_vector(15000.0, 10000.0), div_b=_const_scalar(0.0),
        c=_const_scalar(0.01), f=f, u0=_const_scalar(0.0), t0=t0,
        radiation="constant", exact=None, smooth_data=True)


def builtin_problem(example_id, convection_factor=None):
    """One of the built-in benchmark problems ex1, ex2, ex3.

    convection_factor rescales the ex2 convection field to
    factor * (x1, 0); the source and jumps are re-derived accordingly.
    """
    if example_id == "ex1":
        return _problem_ex1()
    if example_id == "ex2":
        return _problem_ex2(1000.0 if convection_factor is None
                            else convection_factor)
    if example_id == "ex3":
        return _problem_ex3()
    raise ValueError("unknown example id %r" % (example_id,))


# ----------------------------------------------------------------------
# validation
# ----------------------------------------------------------------------
class ValidationReport:
    def __init__(self):
        self.passed = True
        self.messages = []

    def fail(self, message):
        self.passed = False
        self.messages.append(message)

    def note(self, message):
        self.messages.append(message)

    def __bool__(self):
        return self.passed


def validate(spec, mesh):
    """Check coerciveness, domain diameter and coefficient alignment."""
    report = ValidationReport()

    pts, _ = quadrature.triangle_points(
        mesh.vertices[mesh.triangles[:, 0]],
        mesh.vertices[mesh.triangles[:, 1]],
        mesh.vertices[mesh.triangles[:, 2]], degree=4)
    samples = np.concatenate(
        [pts.reshape(-1, 2), mesh.vertices[mesh.triangles].reshape(-1, 2)])
    w = spec.coercivity_weight(samples)
    if np.any(w < -1e-12):
        bad = samples[np.argmin(w)]
        report.fail("coerciveness violated: div(b)/2 + c = %g at %s"
                    % (w.min(), bad))

    corners = spec.polygon
    d = np.linalg.norm(corners[:, None, :] - corners[None, :, :], axis=2)
    if d.max() >= 1.0:
        report.fail("domain diameter %.4f not below 1" % d.max())

    sub = spec.diffusion.subdomain
    if sub is not None:
        probes = np.stack([mesh.barycenter,
                           0.5 * (mesh.barycenter
                                  + mesh.vertices[mesh.triangles[:, 0]]),
                           0.5 * (mesh.barycenter
                                  + mesh.vertices[mesh.triangles[:, 1]]),
                           0.5 * (mesh.barycenter
                                  + mesh.vertices[mesh.triangles[:, 2]])],
                          axis=1)
        ids = sub(probes)
        misaligned = np.where(np.any(ids != ids[:, :1], axis=1))[0]
        if len(misaligned):
            report.fail("mesh not aligned with diffusion jumps in "
                        "%d elements (first: %d)"
                        % (len(misaligned), misaligned[0]))

    # flag boundary edges on which b.n changes sign (no rule exists)
    a, bnode = mesh.boundary_pairs.T
    pa, pb = mesh.vertices[a], mesh.vertices[bnode]
    tq, _ = quadrature.gauss_legendre(2)
    probe = pa[:, None, :] + tq[:, None] * (pb - pa)[:, None, :]
    bn = np.sum(spec.b(probe) * mesh.boundary_normal[:, None, :], axis=-1)
    bn_mid = np.sum(spec.b(mesh.boundary_mid) * mesh.boundary_normal,
                    axis=-1)
    flip = np.any((bn < -1e-12) != (bn_mid < -1e-12)[:, None], axis=1)
    if np.any(flip):
        report.note("b.n changes sign within %d boundary edges; "
                    "midpoint rule used" % np.count_nonzero(flip))
    return report


# ----------------------------------------------------------------------
# problem configuration files
# ----------------------------------------------------------------------
def _parse_boxes(text, default):
    """Parse 'x0,y0,x1,y1:value;...' tables with a trailing default."""
    boxes = []
    for part in text.split(";"):
        part = part.strip()
        if not part:
            continue
        if ":" not in part:
            default = float(part)
            continue
        coords, value = part.rsplit(":", 1)
        x0, y0, x1, y1 = (float(v) for v in coords.split(","))
        boxes.append((x0, y0, x1, y1, float(value)))

    def field(x):
        x = np.asarray(x, float)
        out = np.full(x.shape[:-1], default)
        for x0, y0, x1, y1, v in boxes:
            inside = ((x[..., 0] >= x0) & (x[..., 0] <= x1)
                      & (x[..., 1] >= y0) & (x[..., 1] <= y1))
            out = np.where(inside, v, out)
        return out

    return field


def parse_problem_config(path):
    """Line-oriented key=value problem description.

    example=ex1|ex2|ex3 selects a built-in problem. example=custom reads
    polygon=x,y;x,y;..., piecewise-constant tables alpha= and f= (either
    a plain constant or 'x0,y0,x1,y1:value' boxes with a default), and
    constants b=, c=. Custom jumps are zero.
    """
    entries = {}
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError("malformed config line %r" % line)
            key, value = line.split("=", 1)
            entries[key.strip()] = value.strip()

    example = entries.get("example")
    if example in ("ex1", "ex2", "ex3"):
        factor = entries.get("convection_factor")
        return builtin_problem(
            example, None if factor is None else float(factor))
    if example != "custom":
        raise ValueError("unknown example %r" % (example,))

    if "polygon" not in entries:
        raise ValueError("custom problem needs a polygon")
    polygon = np.array([[float(v) for v in pt.split(",")]
                        for pt in entries["polygon"].split(";") if pt])
    alpha = _parse_boxes(entries.get("alpha", "1.0"), 1.0)
    f = _parse_boxes(entries.get("f", "0.0"), 0.0)
    bx, by = (float(v) for v in entries.get("b", "0,0").split(","))
    c = float(entries.get("c", "0"))

    def t0(x, n):
        x = np.asarray(x, float)
        return np.zeros(x.shape[:-1])

    return ProblemSpec(
        "custom", "custom", polygon, Diffusion.from_scalar(alpha),
        b=_const_vector(bx, by), div_b=_const_scalar(0.0),
        c=_const_scalar(c), f=f, u0=_const_scalar(0.0), t0=t0,
        radiation=entries.get("radiation", "constant"),
        exact=None, smooth_data=True,
        zero_convection=(bx == 0.0 and by == 0.0))


def initial_mesh_for(spec, target_elements=None):
    """Build the starting mesh for a problem spec."""
    if spec.domain_id in ("lshape", "square"):
        if target_elements is None:
            target_elements = 48 if spec.domain_id == "lshape" else 64
        return build_initial_mesh(spec.domain_id, target_elements)
    from .polygon import mesh_polygon
    return mesh_polygon(spec.polygon, target_elements or 32)
