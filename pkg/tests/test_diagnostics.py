import math

import numpy as np
import pytest

from vortexstring import diagnostics, grid as gr, model, strings, vortex
from vortexstring.errors import ConfigError


@pytest.fixture(scope="module")
def flat_solution():
    spec = model.ProblemSpec(centers=(((0.0, 0.0), 1),), m=1.0, beta=2.0)
    g = gr.build_grid(12.0, 241, spec)
    v, rep = vortex.solve_vortex(spec, g)
    return spec, g, v


class TestSyntheticFits:
    def test_exponential_planted_order(self):
        spec = model.ProblemSpec(centers=(((0.0, 0.0), 1),), m=1.0, beta=2.0)
        g = gr.build_grid(12.0, 241, spec)
        fld = gr.Field2D.from_function(g, lambda x, y: -np.exp(-2.0 * np.hypot(x, y)))
        order, conf = diagnostics.decay_fit(fld, "exponential")
        assert order == pytest.approx(2.0, rel=0.01)
        assert conf > 0.99

    def test_algebraic_planted_order(self):
        spec = model.ProblemSpec(centers=(((0.0, 0.0), 1),), m=1.0, beta=2.0)
        g = gr.build_grid(12.0, 241, spec)
        fld = gr.Field2D.from_function(g, lambda x, y: -np.hypot(x, y) ** -2.0)
        order, conf = diagnostics.decay_fit(fld, "algebraic")
        assert order == pytest.approx(2.0, rel=0.01)
        assert conf > 0.99

    def test_bad_kind_rejected(self, flat_solution):
        _, _, v = flat_solution
        with pytest.raises(ConfigError):
            diagnostics.decay_fit(v, "powerlaw")

    def test_too_few_samples(self):
        # zero field on the annulus leaves no usable samples
        spec = model.ProblemSpec(centers=(((0.0, 0.0), 1),), m=1.0, beta=2.0)
        g = gr.build_grid(12.0, 241, spec)
        fld = gr.Field2D.zeros(g)
        with pytest.raises(ConfigError):
            diagnostics.decay_fit(fld, "exponential")


class TestFluxAndEnergy:
    def test_zero_field_zero_flux_energy(self):
        spec = model.ProblemSpec(centers=(), m=1.0, beta=2.0)
        g = gr.Grid2D(12.0, 241)
        fld = gr.Field2D.zeros(g)
        flux, src = diagnostics.flux_and_source(fld, spec)
        assert flux == 0.0 and src == 0.0
        assert diagnostics.energy_total(fld, spec) == 0.0

    def test_source_integral_quantized(self, flat_solution):
        spec, g, v = flat_solution
        _, src = diagnostics.flux_and_source(v, spec)
        assert abs(src + 4.0 * math.pi) / (4.0 * math.pi) < 0.005

    def test_two_routes_agree(self, flat_solution):
        spec, g, v = flat_solution
        flux, src = diagnostics.flux_and_source(v, spec)
        assert abs(flux - (-src / 2.0)) / abs(flux) < 0.01

    def test_flux_scales_with_n(self):
        spec = model.ProblemSpec(
            centers=(((-1.0, -0.6), 1), ((1.1, 0.2), 1), ((0.0, 0.9), 1)),
            m=1.0, beta=2.0)
        g = gr.build_grid(16.0, 321, spec)
        v, _ = vortex.solve_vortex(spec, g)
        flux, src = diagnostics.flux_and_source(v, spec)
        assert flux == pytest.approx(6.0 * math.pi, rel=0.005)
        assert src == pytest.approx(-12.0 * math.pi, rel=0.005)

    def test_energy_saturates_bound(self, flat_solution):
        spec, g, v = flat_solution
        energy = diagnostics.energy_total(v, spec)
        assert energy == pytest.approx(math.pi, rel=0.02)
        assert energy >= math.pi * (1.0 - 0.02)

    def test_energy_two_coincident(self):
        spec = model.ProblemSpec(centers=(((0.0, 0.0), 2),), m=1.0, beta=2.0)
        g = gr.build_grid(12.0, 241, spec)
        v, _ = vortex.solve_vortex(spec, g)
        assert diagnostics.energy_total(v, spec) == pytest.approx(
            2.0 * math.pi, rel=0.02)

    def test_vortex_decay_order(self, flat_solution):
        spec, g, v = flat_solution
        order, _ = diagnostics.decay_fit(v, "exponential")
        assert order == pytest.approx(2.0, rel=0.10)


class TestMetricDeficit:
    def test_requires_gravity(self, flat_solution):
        spec, g, v = flat_solution
        with pytest.raises(ConfigError):
            diagnostics.metric_and_deficit(v, spec)

    def test_small_g_limit(self):
        # G -> 0: the string solve degenerates to a vortex and the curvature
        # integral tracks 8 pi^2 G N continuously (beta above the
        # subsolution threshold)
        G = 1e-6
        spec = model.ProblemSpec(centers=(((-1.0, 0.0), 1), ((1.0, 0.0), 1)),
                                 m=1.0, beta=20.0, G=G)
        g = gr.build_grid(12.0, 241, spec)
        v, _ = strings.solve_string_fixed_delta(spec, g, 0.01)
        _, deficit, _, warns = diagnostics.metric_and_deficit(v, spec)
        target = 8.0 * math.pi**2 * G * 2
        assert deficit == pytest.approx(target, rel=0.05)
        assert any("NORMALIZATION_DEFAULT" in w for w in warns)

    def test_half_an_deficit_and_tail(self):
        N = 2
        G = 0.5 / (4.0 * math.pi * N)
        spec = model.ProblemSpec(centers=(((-1.0, 0.0), 1), ((1.0, 0.0), 1)),
                                 m=1.0, beta=20.0, G=G)
        g = gr.build_grid(12.0, 241, spec)
        opts = strings.StringSolveOptions(delta_schedule=[0.5, 0.25, 0.125])
        v, _, _ = strings.solve_string_continuation(spec, g, opts)
        eta, deficit, tail_order, _ = diagnostics.metric_and_deficit(v, spec)
        target = 8.0 * math.pi**2 * G * N
        assert deficit / target == pytest.approx(1.0, abs=0.02)
        assert tail_order == pytest.approx(-8.0 * math.pi * G * N, rel=0.10)

    def test_lambda_from_kappa(self):
        # lambda = beta kappa^2 / 4 when only kappa is supplied
        N = 2
        G = 0.5 / (4.0 * math.pi * N)
        spec = model.ProblemSpec(centers=(((-1.0, 0.0), 1), ((1.0, 0.0), 1)),
                                 m=1.0, beta=20.0, G=G, kappa=1.0)
        g = gr.build_grid(12.0, 241, spec)
        v, _ = strings.solve_string_fixed_delta(spec, g, 0.25)
        _, _, _, warns = diagnostics.metric_and_deficit(v, spec)
        assert not any("NORMALIZATION_DEFAULT" in w for w in warns)


class TestBundle:
    def test_flat_bundle(self, flat_solution):
        spec, g, v = flat_solution
        bundle = diagnostics.compute_bundle(v, spec)
        assert bundle.deficit_angle_integral is None
        assert bundle.metric_tail_order is None
        assert bundle.energy == pytest.approx(math.pi, rel=0.02)
        d = bundle.to_dict()
        assert d["total_flux"] == bundle.total_flux

    def test_string_bundle_populates_deficit(self):
        N = 2
        G = 0.5 / (4.0 * math.pi * N)
        spec = model.ProblemSpec(centers=(((-1.0, 0.0), 1), ((1.0, 0.0), 1)),
                                 m=1.0, beta=20.0, G=G)
        g = gr.build_grid(12.0, 241, spec)
        v, _ = strings.solve_string_fixed_delta(spec, g, 0.25)
        w = strings.build_string_weight(g, spec, 0.25)
        bundle = diagnostics.compute_bundle(v, spec, weight=w)
        assert bundle.deficit_angle_integral is not None
        assert bundle.deficit_angle_predicted == pytest.approx(
            8.0 * math.pi**2 * G * N)
