import numpy as np
import pytest

from skyframes import minkowski as mk
from skyframes import sky, spinor
from skyframes.errors import ZeroSpinorError
from skyframes.minkowski import CausalOrder


@pytest.fixture(scope="module")
def sample():
    return sky.sample_sky(64)


class TestGraphImage:
    def test_origin_maps_to_zero_section(self, sample):
        img = mk.sky_image_minkowski([0, 0, 0, 0], sample)
        assert np.allclose(img.heights, 0.0)

    def test_time_translation_is_constant_graph(self, sample):
        img = mk.sky_image_minkowski([1, 0, 0, 0], sample)
        assert np.allclose(img.heights, 0.5)

    def test_null_event_heights_at_special_points(self):
        x = [1.0, 0, 0, 1.0]
        xi_zero = np.array([0.0, 1.0])
        xi_one = np.array([1.0, 0.0])
        assert sky.celestial_eval(x, xi_zero) == pytest.approx(0.0, abs=1e-15)
        assert sky.celestial_eval(x, xi_one) == pytest.approx(1.0)

    def test_translation_shifts_heights_linearly(self, sample):
        rng = np.random.default_rng(0)
        x, t = rng.normal(size=(2, 4))
        a = mk.sky_image_minkowski(x + t, sample).heights
        b = mk.sky_image_minkowski(x, sample).heights
        c = mk.sky_image_minkowski(t, sample).heights
        assert np.allclose(a, b + c, atol=1e-14)

    def test_boost_covariance_at_matched_points(self, sample):
        rng = np.random.default_rng(1)
        c = spinor.random_sl2(rng)
        x = rng.normal(size=4)
        x_boost = spinor.inverse_pauli(
            spinor.sl2_act(c, spinor.pauli_transform(x)), tol=1e-9
        )
        cinv = np.linalg.inv(c)
        matched = sample.xi @ cinv
        weights = np.linalg.norm(matched, axis=-1) ** 2
        matched = matched / np.sqrt(weights)[:, None]
        lhs = sky.celestial_eval(np.broadcast_to(x_boost, (sample.n, 4)), matched)
        lhs = lhs * weights
        rhs = mk.sky_image_minkowski(x, sample).heights
        assert np.allclose(lhs, rhs, atol=1e-9 * max(1.0, np.abs(rhs).max()))

    def test_null_graph_tangent_to_zero_section(self):
        # height and its first-order variation vanish at the null direction
        rng = np.random.default_rng(2)
        for _ in range(20):
            psi = rng.normal(size=2) + 1j * rng.normal(size=2)
            v = spinor.inverse_pauli(spinor.outer_square(psi))
            xi = spinor.cospinor_for_null_vector(v)
            assert sky.celestial_eval(v, xi) == pytest.approx(0.0, abs=1e-12)
            delta = mk._orthogonal_unit(xi)
            h = 1e-5
            for step in (delta, 1j * delta):
                plus = sky.celestial_eval(v, sky.unit_cospinor(xi + h * step))
                minus = sky.celestial_eval(v, sky.unit_cospinor(xi - h * step))
                assert abs((plus - minus) / (2 * h)) <= 1e-8

    def test_json_schema(self, sample):
        d = mk.sky_image_minkowski([1, 2, 3, 4], sample).to_json_dict()
        assert set(d) == {"event", "samples"}
        assert set(d["samples"][0]) == {"xi", "height"}
        assert len(d["samples"][0]["xi"]) == 4


class TestNullHyperplane:
    def test_through_origin(self):
        h = mk.hyperplane_through([0, 0, 0, 0], [0.3 + 1j, -0.2])
        assert h.chi == pytest.approx(0.0)

    def test_through_unit_time(self):
        h = mk.hyperplane_through([1, 0, 0, 0], [1.0, 0.0])
        assert h.chi == pytest.approx(0.5)

    def test_rejects_zero_covector(self):
        with pytest.raises(ZeroSpinorError):
            mk.hyperplane_through([1, 0, 0, 0], [0.0, 0.0])

    def test_contains_its_base_event(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            x = rng.normal(size=4)
            xi = rng.normal(size=2) + 1j * rng.normal(size=2)
            assert mk.hyperplane_contains(mk.hyperplane_through(x, xi), x)

    def test_examples_on_and_off(self):
        h = mk.NullHyperplane(xi=np.array([1.0, 0.0]), chi=0.0)
        assert mk.hyperplane_contains(h, [1, 0, 0, -1])
        assert not mk.hyperplane_contains(h, [1, 0, 0, 0])

    def test_membership_matches_field_equation(self):
        rng = np.random.default_rng(4)
        x = rng.normal(size=4)
        xi = sky.unit_cospinor(rng.normal(size=2) + 1j * rng.normal(size=2))
        h = mk.hyperplane_through(x, xi)
        e0 = np.array([1.0, 0, 0, 0])
        for _ in range(100):
            w = rng.normal(size=4)
            on_plane = x + w - 2.0 * sky.celestial_eval(w, xi) * e0
            assert mk.hyperplane_contains(h, on_plane)
            off = on_plane + e0 * rng.uniform(0.1, 1.0)
            assert not mk.hyperplane_contains(h, off)


class TestCausalCompare:
    @pytest.mark.parametrize(
        "x,y,expected",
        [
            ([2, 0, 0, 0], [0, 0, 0, 0], CausalOrder.Y_PAST_OF_X),
            ([1, 2, 3, 4], [1, 2, 3, 4], CausalOrder.EQUAL),
            ([0, 2, 0, 0], [0, 0, 0, 0], CausalOrder.SPACELIKE),
            ([0, 0, 0, 0], [1, 0, 0, 0], CausalOrder.X_PAST_OF_Y),
        ],
    )
    def test_examples(self, x, y, expected):
        assert mk.causal_compare(x, y) is expected

    def test_boundary_counts_as_causal(self):
        assert mk.causal_compare([1, 0, 0, 1], [0, 0, 0, 0]) is CausalOrder.Y_PAST_OF_X

    def test_exact_null_separations_agree_with_interval(self):
        # axis-aligned null separations are exact in floating point
        rng = np.random.default_rng(8)
        a = rng.uniform(0.1, 3.0, size=200)
        axis = rng.integers(1, 4, size=200)
        xs = np.zeros((200, 4))
        xs[:, 0] = a
        xs[np.arange(200), axis] = np.where(rng.random(200) < 0.5, a, -a)
        ys = np.zeros((200, 4))
        assert np.all(mk.causal_compare_batch(xs, ys) == 1)
        assert np.all(mk.interval_compare_batch(xs, ys) == 1)

    def test_agrees_with_interval_criterion(self):
        rng = np.random.default_rng(5)
        xs = rng.uniform(-2, 2, size=(100_000, 4))
        ys = rng.uniform(-2, 2, size=(100_000, 4))
        d = xs - ys
        margin = np.abs(np.abs(d[:, 0]) - np.linalg.norm(d[:, 1:], axis=1))
        keep = margin > 1e-9
        a = mk.causal_compare_batch(xs[keep], ys[keep])
        b = mk.interval_compare_batch(xs[keep], ys[keep])
        assert np.array_equal(a, b)

    def test_batch_matches_scalar(self):
        rng = np.random.default_rng(6)
        xs = rng.normal(size=(50, 4))
        ys = rng.normal(size=(50, 4))
        codes = mk.causal_compare_batch(xs, ys)
        for x, y, code in zip(xs, ys, codes):
            assert mk._CODES[mk.causal_compare(x, y)] == code
            assert mk.interval_compare(x, y) in mk._CODES


class TestGraphFrame:
    def test_gradient_matches_finite_differences(self):
        frame = mk.GraphFrame()
        rng = np.random.default_rng(7)
        x = rng.normal(size=4)
        xi = sky.unit_cospinor(rng.normal(size=2) + 1j * rng.normal(size=2))
        g = frame.image_gradient(x, xi)
        delta = mk._orthogonal_unit(xi)
        h = 1e-6
        for k, step in enumerate((delta, 1j * delta)):
            plus = sky.celestial_eval(x, sky.unit_cospinor(xi + h * step))
            minus = sky.celestial_eval(x, sky.unit_cospinor(xi - h * step))
            assert (plus - minus) / (2 * h) == pytest.approx(g[k], abs=1e-7)

    def test_family_coefficient_is_transform_of_direction(self):
        frame = mk.GraphFrame()
        x = np.array([0.2, -0.4, 1.0, 0.3])
        xi = sky.unit_cospinor(np.array([0.8, 0.6j]))
        d = np.array([0.5, 0.1, -0.2, 0.9])
        assert frame.normal_coeff_of_family(x, xi, d) == pytest.approx(
            sky.celestial_eval(d, xi)
        )
