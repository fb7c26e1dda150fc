import math

import numpy as np
import pytest

from vortexstring import grid as gr
from vortexstring import model
from vortexstring.errors import ConfigError


def spec_for(centers=(((0.0, 0.0), 1),), m=1.0, beta=2.0, G=0.0):
    return model.ProblemSpec(centers=centers, m=m, beta=beta, G=G)


class TestBuildGrid:
    def test_offset_when_center_on_node(self):
        g = gr.build_grid(20.0, 201, spec_for())
        h = g.spacing
        assert h == pytest.approx(0.2)
        assert g.offset == (h / 2.0, h / 2.0)

    def test_no_offset_when_center_clear(self):
        g = gr.build_grid(20.0, 201, spec_for(centers=(((0.05, 0.05), 1),)))
        assert g.offset == (0.0, 0.0)

    def test_center_outside_half_disk(self):
        with pytest.raises(ConfigError):
            gr.build_grid(1.0, 33, spec_for(centers=(((0.9, 0.0), 1),)))

    def test_radius_vs_center_distance(self):
        with pytest.raises(ConfigError):
            gr.build_grid(10.0, 201, spec_for(centers=(((3.0, 0.0), 1),)))

    def test_even_nodes_rejected(self):
        with pytest.raises(ConfigError):
            gr.build_grid(10.0, 200, spec_for())

    def test_too_few_nodes_rejected(self):
        with pytest.raises(ConfigError):
            gr.build_grid(10.0, 31, spec_for())

    def test_nodes_avoid_centers(self):
        s = spec_for(centers=(((0.0, 0.0), 1), ((0.4, -0.6), 2)))
        g = gr.build_grid(16.0, 161, s)
        assert np.min(g.center_distance(s)) > 1e-9 * g.spacing


class TestLaplacian:
    def test_constant_field(self):
        g = gr.Grid2D(5.0, 65)
        out = gr.apply_laplacian(gr.Field2D.from_function(g, lambda x, y: 3.0 + 0 * x))
        assert np.max(np.abs(out.values)) == 0.0

    def test_quadratic_exact(self):
        g = gr.Grid2D(5.0, 65)
        out = gr.apply_laplacian(gr.Field2D.from_function(g, lambda x, y: x**2 + y**2))
        assert np.max(np.abs(out.interior() - 4.0)) < 1e-7
        # boundary nodes of the result are zeroed
        assert np.all(out.values[0, :] == 0.0)

    def test_sine_second_order(self):
        g = gr.Grid2D(math.pi, 127)
        assert g.spacing < 0.05 * 1.01
        fld = gr.Field2D.from_function(g, lambda x, y: np.sin(x))
        out = gr.apply_laplacian(fld)
        X, _ = g.mesh()
        err = np.max(np.abs(out.interior() + np.sin(X[1:-1, 1:-1])))
        assert err < 0.01


class TestHelmholtz:
    def test_zero_rhs_zero_boundary(self):
        g = gr.Grid2D(4.0, 49)
        u = gr.helmholtz_solve(1.0, gr.Field2D.zeros(g), gr.Field2D.zeros(g))
        assert np.max(np.abs(u.values)) == 0.0

    def test_poisson_recovers_quadratic(self):
        g = gr.Grid2D(4.0, 65)
        exact = gr.Field2D.from_function(g, lambda x, y: x**2 + y**2)
        rhs = gr.apply_laplacian(exact)
        u = gr.helmholtz_solve(0.0, rhs, exact)
        assert np.max(np.abs(u.values - exact.values)) < 1e-9

    def test_manufactured_gaussian_discrete(self):
        g = gr.Grid2D(6.0, 97)
        exact = gr.Field2D.from_function(g, lambda x, y: np.exp(-(x**2 + y**2)))
        rhs_vals = gr.apply_laplacian(exact).values - exact.values
        rhs = gr.Field2D(g, rhs_vals)
        u = gr.helmholtz_solve(1.0, rhs, exact)
        assert np.max(np.abs(u.values - exact.values)) < 1e-9

    def test_negative_k_rejected(self):
        g = gr.Grid2D(4.0, 49)
        with pytest.raises(ConfigError):
            gr.helmholtz_solve(-1.0, gr.Field2D.zeros(g), gr.Field2D.zeros(g))

    def test_maximum_principle_random_rhs(self):
        rng = np.random.default_rng(7)
        g = gr.Grid2D(4.0, 49)
        for _ in range(5):
            vals = np.zeros((49, 49))
            vals[1:-1, 1:-1] = rng.uniform(0.0, 1.0, (47, 47))
            bvals = np.zeros((49, 49))
            bvals[0, :] = -rng.uniform(0.0, 0.5, 49)
            u = gr.helmholtz_solve(2.0, gr.Field2D(g, vals), gr.Field2D(g, bvals))
            assert np.max(u.values) <= 1e-12

    def test_symmetry_of_stencil(self):
        rng = np.random.default_rng(11)
        g = gr.Grid2D(3.0, 41)
        a = np.zeros((41, 41))
        b = np.zeros((41, 41))
        a[1:-1, 1:-1] = rng.standard_normal((39, 39))
        b[1:-1, 1:-1] = rng.standard_normal((39, 39))
        fa, fb = gr.Field2D(g, a), gr.Field2D(g, b)
        lhs = np.sum(a * gr.apply_laplacian(fb).values)
        rhs = np.sum(gr.apply_laplacian(fa).values * b)
        scale = max(abs(lhs), abs(rhs), 1.0)
        assert abs(lhs - rhs) <= 1e-12 * scale

    def test_second_order_convergence_analytic_rhs(self):
        # halving the spacing cuts the manufactured-solution error ~4x
        def solve_err(n):
            g = gr.Grid2D(6.0, n)
            X, Y = g.mesh()
            r2 = X**2 + Y**2
            exact_vals = np.exp(-r2)
            rhs = gr.Field2D(g, (4.0 * r2 - 4.0) * exact_vals - exact_vals)
            u = gr.helmholtz_solve(1.0, rhs, gr.Field2D(g, exact_vals))
            return np.max(np.abs(u.values - exact_vals))

        e1, e2 = solve_err(81), solve_err(161)
        assert 3.0 < e1 / e2 < 5.0


class TestShiftedOperator:
    def test_matches_helmholtz_for_constant_shift(self):
        g = gr.Grid2D(4.0, 49)
        rng = np.random.default_rng(3)
        rhs = np.zeros((49, 49))
        rhs[1:-1, 1:-1] = rng.standard_normal((47, 47))
        bnd = gr.Field2D.from_function(g, lambda x, y: 0.01 * x)
        ref = gr.helmholtz_solve(2.5, gr.Field2D(g, rhs), bnd)
        c = np.full((47, 47), 2.5)
        got = gr.shifted_solve(g, c, gr.Field2D(g, rhs), bnd)
        assert np.max(np.abs(got.values - ref.values)) < 1e-9


class TestResidualAndSource:
    def test_effective_source_matches_g_near_centers(self):
        s = spec_for()
        g = gr.build_grid(10.0, 101, s)
        X, Y = g.mesh()
        _, gg = model.background_arrays(X, Y, s)
        src = gr.effective_source(g, s)
        near = (g.center_distance(s) <= 0.5)
        near[0, :] = near[-1, :] = near[:, 0] = near[:, -1] = False
        assert np.allclose(src[near], gg[near])

    def test_effective_source_far_is_discrete_laplacian(self):
        s = spec_for()
        g = gr.build_grid(10.0, 101, s)
        X, Y = g.mesh()
        v0, _ = model.background_arrays(X, Y, s)
        lap = gr.apply_laplacian(gr.Field2D(g, v0)).values
        src = gr.effective_source(g, s)
        far = (g.center_distance(s) > gr.NEAR_SOURCE_RADIUS)
        far[0, :] = far[-1, :] = far[:, 0] = far[:, -1] = False
        assert np.allclose(src[far], -lap[far])

    def test_residual_sup_semantics(self):
        s = spec_for()
        g = gr.build_grid(10.0, 101, s)
        X, Y = g.mesh()
        v0, _ = model.background_arrays(X, Y, s)
        w = gr.Field2D.from_function(g, lambda x, y: 0.1 * np.exp(-(x**2 + y**2)))
        expected = np.abs(
            gr.apply_laplacian(w).values[1:-1, 1:-1]
            - (model.nonlinearity(v0 + w.values, s)
               + gr.effective_source(g, s))[1:-1, 1:-1])
        assert gr.residual_sup(w, s) == pytest.approx(np.max(expected))

    def test_zero_field_residual_positive(self):
        s = spec_for()
        g = gr.build_grid(10.0, 101, s)
        assert gr.residual_sup(gr.Field2D.zeros(g), s) > 0.0


class TestFluxHelperAndCsv:
    def test_mask_flux_telescopes_laplacian(self):
        g = gr.Grid2D(4.0, 49)
        rng = np.random.default_rng(5)
        vals = rng.standard_normal((49, 49))
        mask = np.zeros((49, 49), dtype=bool)
        mask[10:30, 12:33] = True
        fld = gr.Field2D(g, vals)
        lap_sum = np.sum(gr.apply_laplacian(fld).values[mask]) * g.spacing**2
        assert gr.mask_boundary_flux(vals, mask) == pytest.approx(lap_sum, rel=1e-10)

    def test_csv_round_trip(self, tmp_path):
        g = gr.Grid2D(2.0, 33)
        fld = gr.Field2D.from_function(g, lambda x, y: np.sin(x) * y)
        path = tmp_path / "field.csv"
        fld.write_csv(path)
        x, y, v = gr.read_field_csv(path)
        X, Y = g.mesh()
        assert np.array_equal(x, X.ravel())
        assert np.array_equal(y, Y.ravel())
        assert np.array_equal(v, fld.values.ravel())
        header = path.read_text().splitlines()[0]
        assert header == "x,y,value"
