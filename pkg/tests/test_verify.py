import json

import numpy as np
import pytest

from skyframes import frames as fr
from skyframes import manifold as mf
from skyframes import sky, verify as vf
from skyframes.minkowski import GraphFrame

DIRECTIONS = np.array(
    [[1.0, 0, 0, 0], [1.0, 0.5, 0, 0], [1.0, 0, -0.4, 0.3], [2.0, 0.3, 0.3, -0.3]]
)


@pytest.fixture(scope="module")
def flrw_spec():
    return fr.FrameSpec(metric=mf.MetricSpec.flrw(p=2 / 3), target=fr.Singularity())


@pytest.fixture(scope="module")
def flrw_geo(flrw_spec):
    return fr.GeodesicFrame(flrw_spec)


class TestContactAnnihilation:
    def test_flat_space_pointwise(self):
        spec = fr.FrameSpec(
            metric=mf.MetricSpec.minkowski(), target=fr.CauchySurface(0.0)
        )
        rep = vf.check_contact_annihilation(
            spec, [0.4, 0.2, -0.7, 0.1], [0.6, 0.8j], lam_end=-1.0
        )
        assert rep.passed
        assert rep.max_residual <= 1e-12

    def test_cosmology_trajectory(self, flrw_spec):
        rep = vf.check_contact_annihilation(flrw_spec, [1.0, 0, 0, 0], [1.0, 0.0])
        assert rep.passed
        assert rep.extras["max_null_drift"] <= 1e-8
        assert rep.extras["states"] > 100

    def test_vertical_probe_is_exactly_zero(self, flrw_spec):
        rep = vf.check_contact_annihilation(flrw_spec, [1.0, 0, 0, 0], [1.0, 0.0])
        assert rep.residuals[1] == 0.0


class TestKernelProportionality:
    def test_graph_frame_ratio_constancy(self):
        frame = GraphFrame()
        rng = np.random.default_rng(0)
        for _ in range(20):
            x = rng.normal(size=4)
            xi = sky.unit_cospinor(rng.normal(size=2) + 1j * rng.normal(size=2))
            rep = vf.check_kernel_proportionality(frame, x, xi)
            assert rep.passed, rep.max_residual
            assert rep.extras["empirical_factor"] == pytest.approx(1.0, abs=1e-9)

    def test_cosmology_frame_factor(self, flrw_geo):
        rng = np.random.default_rng(1)
        for _ in range(5):
            x = np.array([rng.uniform(0.4, 1.4), *rng.normal(size=3)])
            xi = sky.unit_cospinor(rng.normal(size=2) + 1j * rng.normal(size=2))
            rep = vf.check_kernel_proportionality(flrw_geo, x, xi)
            assert rep.passed, rep.max_residual
            expected = 2.0 / float(flrw_geo.spec.metric.scale_factor(x[0]))
            assert rep.extras["empirical_factor"] == pytest.approx(expected, rel=1e-6)
            assert np.all(rep.extras["ratios"] > 0)

    def test_richardson_convergence(self, flrw_geo):
        x = np.array([0.8, 0.1, -0.2, 0.05])
        xi = sky.unit_cospinor(np.array([0.7, 0.1 - 0.6j]))
        r1 = vf.check_kernel_proportionality(flrw_geo, x, xi, event_h=4e-3)
        r2 = vf.check_kernel_proportionality(flrw_geo, x, xi, event_h=2e-3)
        assert r1.residuals[0] / r2.residuals[0] >= 3.0

    def test_numeric_tracer_frame(self):
        geo = fr.GeodesicFrame(
            fr.FrameSpec(
                metric=mf.MetricSpec.flrw(p=2 / 3),
                target=fr.Singularity(),
                tracer="numeric",
            )
        )
        x = np.array([0.9, 0.1, -0.2, 0.05])
        xi = sky.unit_cospinor(np.array([0.7, 0.1 - 0.6j]))
        rep = vf.check_kernel_proportionality(geo, x, xi)
        assert rep.passed, rep.max_residual
        expected = 2.0 / float(geo.spec.metric.scale_factor(x[0]))
        assert rep.extras["empirical_factor"] == pytest.approx(expected, rel=1e-4)

    def test_flat_geodesic_frame_factor(self):
        geo = fr.GeodesicFrame(
            fr.FrameSpec(metric=mf.MetricSpec.minkowski(), target=fr.CauchySurface(0.0))
        )
        rep = vf.check_kernel_proportionality(geo, [1.0, 0.2, -0.3, 0.1], [0.6, 0.8j])
        assert rep.passed
        assert rep.extras["empirical_factor"] == pytest.approx(2.0, rel=1e-6)


class TestFlowOfTime:
    def test_graph_frame_identity_factor(self):
        frame = GraphFrame()
        sample = sky.sample_sky(40)
        rep = vf.check_flow_of_time(frame, [0.3, 0.1, -0.5, 0.9], DIRECTIONS, sample)
        assert rep.passed
        profile = rep.extras["empirical_factor_profile"]
        assert np.allclose(profile[~np.isnan(profile)], 1.0, atol=1e-9)

    def test_null_direction_ratio_matches_timelike(self):
        # a null probe direction, away from its own sky point, gives the
        # same ratio as a timelike probe at the same sky point
        frame = GraphFrame()
        sample = sky.sample_sky(24)
        dirs = np.array([[1.0, 0, 0, 0], [1.0, 0, 0, 1.0]])
        rep = vf.check_flow_of_time(frame, [0.2, -0.4, 0.6, 0.1], dirs, sample)
        assert rep.passed

    def test_cosmology_direction_independence(self, flrw_geo):
        sample = sky.sample_sky(30)
        rep = vf.check_flow_of_time(flrw_geo, [1.0, 0.2, -0.1, 0.3], DIRECTIONS, sample)
        assert rep.passed
        profile = rep.extras["empirical_factor_profile"]
        assert np.nanmean(profile) == pytest.approx(2.0, rel=1e-6)


class TestContractionIdentity:
    def test_origin_is_exact(self):
        rng = np.random.default_rng(2)
        pis = rng.normal(size=(50, 2)) + 1j * rng.normal(size=(50, 2))
        rep = vf.check_contraction_identity([0.0, 0, 0, 0], pis)
        assert rep.max_residual == 0.0

    def test_random_probes(self):
        rng = np.random.default_rng(3)
        x = rng.normal(size=4)
        pis = rng.normal(size=(1000, 2)) + 1j * rng.normal(size=(1000, 2))
        rep = vf.check_contraction_identity(x, pis)
        assert rep.passed and rep.tolerance == 1e-12


class TestSuites:
    def test_reports_deterministic_for_fixed_seed(self):
        a = [r.to_json_dict() for r in vf.suite_twistor(7, n=200)]
        b = [r.to_json_dict() for r in vf.suite_twistor(7, n=200)]
        assert json.dumps(a, sort_keys=True) == json.dumps(b, sort_keys=True)

    def test_all_mini_suites_pass(self, flrw_geo):
        assert all(r.passed for r in vf.suite_twistor(5, n=100))
        assert all(r.passed for r in vf.suite_contact(5, n=4))
        assert all(r.passed for r in vf.suite_kernel(5, n=4, frame=flrw_geo))
        assert all(r.passed for r in vf.suite_flow(5, n_sky=8, frame=flrw_geo))
        assert all(r.passed for r in vf.suite_kernel(5, n=4, frame=GraphFrame()))
        assert all(r.passed for r in vf.suite_flow(5, n_sky=8, frame=GraphFrame()))

    def test_report_json_schema(self):
        rep = vf.suite_twistor(1, n=10)[0]
        d = rep.to_json_dict()
        assert set(d) == {
            "name",
            "passed",
            "max_residual",
            "tolerance",
            "probe_count",
            "residuals",
            "extras",
        }
