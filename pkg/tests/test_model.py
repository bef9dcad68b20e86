import numpy as np
import pytest

from fvbem.mesh import build_initial_mesh
from fvbem.model import (
    builtin_problem, derive_data_from_exact, classify_boundary, validate,
    parse_problem_config, ProblemSpec, Diffusion, ExactSolution,
    _const_scalar, _const_vector, _zero_vector,
)
from fvbem.mesh import SQUARE_POLYGON


class TestBuiltinData:
    def test_ex2_alpha_values(self):
        spec = builtin_problem("ex2")
        assert spec.diffusion.scalar(np.array([0.1, 0.1])) == 0.42
        assert spec.diffusion.scalar(np.array([0.1, 0.3])) == 10.0

    def test_ex3_source(self):
        spec = builtin_problem("ex3")
        assert spec.f(np.array([-0.15, -0.1])) == 50.0
        assert spec.f(np.array([0.1, 0.1])) == 0.0

    def test_ex1_matrix_at_origin(self):
        spec = builtin_problem("ex1")
        m = spec.diffusion.matrix(np.array([0.0, 0.0]))
        assert np.allclose(m, [[11.0, 0.0], [0.0, 10.0]])

    def test_ex3_alpha_rule(self):
        spec = builtin_problem("ex3")
        a = spec.diffusion.scalar
        assert a(np.array([0.1, 0.1])) == 0.5
        assert a(np.array([-0.1, -0.1])) == 10.0
        assert a(np.array([-0.1, 0.1])) == 50.0

    def test_unknown_id(self):
        with pytest.raises(ValueError):
            builtin_problem("ex4")


class TestDerivedData:
    def test_ex1_f_against_sympy(self):
        import sympy as sp
        x1, x2 = sp.symbols("x1 x2", real=True)
        r = sp.sqrt(x1 ** 2 + x2 ** 2)
        phi = sp.atan2(x2, x1)  # valid branch in the upper half plane
        u = r ** sp.Rational(2, 3) * sp.sin(2 * phi / 3)
        A = sp.Matrix([[10 + sp.cos(x1), 160 * x1 * x2],
                       [160 * x1 * x2, 10 + sp.sin(x2)]])
        grad = sp.Matrix([sp.diff(u, x1), sp.diff(u, x2)])
        flux = A * grad
        f_sym = -(sp.diff(flux[0], x1) + sp.diff(flux[1], x2))
        f_fn = sp.lambdify((x1, x2), sp.simplify(f_sym), "numpy")

        spec = builtin_problem("ex1")
        pt = np.array([-0.1, 0.1])
        assert np.isclose(spec.f(pt), float(f_fn(*pt)), rtol=1e-10)

    def test_ex2_f_against_finite_differences(self):
        spec = builtin_problem("ex2")
        exact = spec.exact
        # central-difference divergence of the flux -alpha grad u + b u
        x = np.array([0.26, 0.1])

        def flux(p):
            a = spec.diffusion.scalar(p)
            return -a * exact.grad_u(p) + spec.b(p) * exact.u(p)

        h = 1e-6
        div = ((flux(x + [h, 0])[0] - flux(x - [h, 0])[0]) / (2 * h)
               + (flux(x + [0, h])[1] - flux(x - [0, h])[1]) / (2 * h))
        assert np.isclose(spec.f(x), div, rtol=1e-6)

    def test_laplace_case_gives_zero_f(self):
        # harmonic u with identity diffusion and no transport: f = 0
        def u(x):
            x = np.asarray(x, float)
            return x[..., 0] ** 2 - x[..., 1] ** 2

        def grad_u(x):
            x = np.asarray(x, float)
            return np.stack([2 * x[..., 0], -2 * x[..., 1]], axis=-1)

        def hess_u(x):
            x = np.asarray(x, float)
            out = np.zeros(x.shape[:-1] + (2, 2))
            out[..., 0, 0] = 2.0
            out[..., 1, 1] = -2.0
            return out

        exact = ExactSolution(u, grad_u, hess_u, u, grad_u)
        spec = ProblemSpec(
            "t", "square", SQUARE_POLYGON,
            Diffusion.from_scalar(_const_scalar(1.0)),
            b=_zero_vector, div_b=_const_scalar(0.0), c=_const_scalar(0.0),
            f=None, u0=None, t0=None, exact=exact)
        f, u0, t0 = derive_data_from_exact(spec)
        pts = np.random.default_rng(0).uniform(0.05, 0.45, size=(10, 2))
        assert np.allclose(f(pts), 0.0, atol=1e-12)

    def test_residual_consistency_random_points(self):
        # div(-A grad u + b u) + c u - f = 0 via finite differences
        spec = builtin_problem("ex1")
        exact = spec.exact
        rng = np.random.default_rng(3)
        pts = rng.uniform([-0.24, 0.01], [-0.01, 0.24], size=(5, 2))
        for x in pts:
            def flux(p):
                m = spec.diffusion.matrix(p)
                return -(m @ exact.grad_u(p))

            h = 1e-6
            div = ((flux(x + [h, 0])[0] - flux(x - [h, 0])[0]) / (2 * h)
                   + (flux(x + [0, h])[1] - flux(x - [0, h])[1]) / (2 * h))
            assert np.isclose(spec.f(x), div, rtol=2e-5)


class TestClassification:
    def test_ex2_left_boundary_is_outflow(self):
        spec = builtin_problem("ex2")
        n = np.array([-1.0, 0.0])
        assert classify_boundary(np.array([0.0, 0.2]), n, spec.b) == "outflow"

    def test_ex2_right_boundary_outflow(self):
        spec = builtin_problem("ex2")
        n = np.array([1.0, 0.0])
        assert classify_boundary(np.array([0.5, 0.2]), n, spec.b) == "outflow"

    def test_ex3_bottom_inflow(self):
        spec = builtin_problem("ex3")
        n = np.array([0.0, -1.0])
        assert classify_boundary(np.array([-0.1, -0.25]), n,
                                 spec.b) == "inflow"

    def test_partition_of_boundary(self):
        spec = builtin_problem("ex3")
        mesh = build_initial_mesh("lshape", 48)
        kinds = classify_boundary(mesh.boundary_mid, mesh.boundary_normal,
                                  spec.b)
        assert set(kinds) <= {"inflow", "outflow"}
        assert len(kinds) == len(mesh.boundary_edges)


class TestValidate:
    def test_ex2_passes(self):
        spec = builtin_problem("ex2")
        mesh = build_initial_mesh("square", 64)
        assert validate(spec, mesh)

    def test_ex3_passes(self):
        spec = builtin_problem("ex3")
        mesh = build_initial_mesh("lshape", 48)
        assert validate(spec, mesh)

    def test_contracting_field_fails(self):
        def b(x):
            x = np.asarray(x, float)
            out = np.zeros(x.shape)
            out[..., 0] = -10.0 * x[..., 0]
            return out

        spec = ProblemSpec(
            "bad", "square", SQUARE_POLYGON,
            Diffusion.from_scalar(_const_scalar(1.0)),
            b=b, div_b=_const_scalar(-10.0), c=_const_scalar(0.0),
            f=_const_scalar(0.0), u0=_const_scalar(0.0),
            t0=lambda x, n: np.zeros(np.asarray(x).shape[:-1]))
        mesh = build_initial_mesh("square", 16)
        report = validate(spec, mesh)
        assert not report.passed

    def test_misaligned_mesh_fails(self):
        # shift the jump line of ex2 off the mesh lines
        def alpha(x):
            x = np.asarray(x, float)
            return np.where(x[..., 1] < 0.27, 0.42, 10.0)

        def sub(x):
            x = np.asarray(x, float)
            return np.where(x[..., 1] < 0.27, 0, 1)

        spec = builtin_problem("ex2")
        bad = ProblemSpec(
            "bad", "square", SQUARE_POLYGON,
            Diffusion.from_scalar(alpha, subdomain=sub),
            b=spec.b, div_b=spec.div_b, c=spec.c, f=spec.f,
            u0=spec.u0, t0=spec.t0)
        mesh = build_initial_mesh("square", 64)
        assert not validate(bad, mesh).passed


class TestConfigFile:
    def test_builtin_selection(self, tmp_path):
        cfg = tmp_path / "problem.cfg"
        cfg.write_text("# comment\nexample=ex2\nconvection_factor=100\n")
        spec = parse_problem_config(cfg)
        assert spec.name == "ex2"
        assert spec.convection_factor == 100.0

    def test_custom_problem(self, tmp_path):
        cfg = tmp_path / "problem.cfg"
        cfg.write_text(
            "example=custom\n"
            "polygon=0,0;0.5,0;0.5,0.5;0,0.5\n"
            "alpha=0,0,0.5,0.25:2.0;1.0\n"
            "b=3,0\nc=0.5\nf=4.0\n")
        spec = parse_problem_config(cfg)
        assert spec.diffusion.scalar(np.array([0.2, 0.1])) == 2.0
        assert spec.diffusion.scalar(np.array([0.2, 0.4])) == 1.0
        assert spec.f(np.array([0.3, 0.3])) == 4.0
        assert np.allclose(spec.b(np.array([0.1, 0.1])), [3.0, 0.0])

    def test_bad_example(self, tmp_path):
        cfg = tmp_path / "problem.cfg"
        cfg.write_text("example=nope\n")
        with pytest.raises(ValueError):
            parse_problem_config(cfg)
