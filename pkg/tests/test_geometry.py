import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import de_casteljau, de_casteljau_surface
from primdetect.errors import DomainError, InvalidInputError, InvalidTransformError
from primdetect.geometry import (
    AffineMap,
    CloudDataset,
    CompositeCurve,
    LabeledDataset,
    Patch,
    PointCloud,
    add_noise,
    circle_arc,
    circle_coefficients,
    cubic_circle_arc,
    evaluate_patch,
    full_circle,
    generate_bezier_family,
    generate_conic_family,
    generate_gear,
    generate_quadric_surfaces,
    generate_surface_primitives,
    hyperbola_segment,
    labels_from_coefficients,
    line_coefficients,
    line_segment,
    normalize_coefficients,
    parabola_segment,
    rescale_to_unit_box,
    restrict_patch,
    sample_dataset,
    sample_patch,
    sample_points,
    transform_patch,
)


def _random_patch(rng, param_dim=1, rational=True):
    if param_dim == 1:
        shape = (int(rng.integers(2, 6)),)
    else:
        shape = (int(rng.integers(2, 4)), int(rng.integers(2, 4)))
    n = 2 if param_dim == 1 else 3
    cp = rng.uniform(-1, 1, size=shape + (n,))
    w = rng.uniform(0.3, 2.0, size=shape) if rational else None
    return Patch(cp, w)


class TestPatch:
    def test_rejects_bad_weights(self):
        with pytest.raises(InvalidInputError):
            Patch([[0, 0], [1, 0], [1, 1]], weights=[1.0, -0.5, 1.0])
        with pytest.raises(InvalidInputError):
            Patch([[0, 0], [1, 0], [1, 1]], weights=[1.0, 1.0])

    def test_rejects_nonfinite_and_bad_shapes(self):
        with pytest.raises(InvalidInputError):
            Patch([[0, 0], [np.nan, 0]])
        with pytest.raises(InvalidInputError):
            Patch([[0, 0, 0, 0], [1, 1, 1, 1]])
        with pytest.raises(InvalidInputError):
            Patch([[0, 0], [1, 1]], domain=((1.0, 1.0),))

    def test_degree_and_dims(self):
        p = Patch(np.zeros((3, 4, 3)))
        assert p.degree == (2, 3)
        assert p.param_dim == 2 and p.ambient_dim == 3
        assert not p.is_rational

    def test_control_points_read_only(self):
        p = line_segment((0, 0), (1, 1))
        with pytest.raises(ValueError):
            p.control_points[0, 0] = 5.0


class TestEvaluation:
    def test_matches_de_casteljau_curves_and_surfaces(self, rng):
        worst = 0.0
        for _ in range(100):
            if rng.random() < 0.6:
                p = _random_patch(rng, 1)
                t = rng.random()
                ref = de_casteljau(p.control_points, p.weights, t)
                got = evaluate_patch(p, t)
            else:
                p = _random_patch(rng, 2)
                u, v = rng.random(2)
                ref = de_casteljau_surface(p.control_points, p.weights, u, v)
                got = evaluate_patch(p, (u, v))
            worst = max(worst, np.max(np.abs(got - ref)) / max(1.0, np.max(np.abs(ref))))
        assert worst < 1e-13

    def test_endpoints_interpolate_control_points(self):
        p = circle_arc((0, 0), 1.0, 0.0, 1.0)
        np.testing.assert_allclose(evaluate_patch(p, 0.0), p.control_points[0], atol=1e-15)
        np.testing.assert_allclose(evaluate_patch(p, 1.0), p.control_points[-1], atol=1e-15)

    def test_outside_domain_raises(self):
        p = line_segment((0, 0), (1, 0))
        with pytest.raises(DomainError):
            evaluate_patch(p, 1.5)
        with pytest.raises(DomainError):
            evaluate_patch(p, (0.2, 0.3))

    def test_custom_domain(self):
        p = Patch([[0, 0], [2, 0]], domain=((2.0, 4.0),))
        np.testing.assert_allclose(evaluate_patch(p, 3.0), [1.0, 0.0])

    def test_sampling_reversal_symmetry(self, rng):
        for _ in range(20):
            p = _random_patch(rng, 1)
            rev = Patch(p.control_points[::-1], None if p.weights is None else p.weights[::-1])
            np.testing.assert_allclose(sample_points(rev, 17), sample_points(p, 17)[::-1], atol=1e-14)

    def test_surface_sample_grid_shape(self):
        p = Patch(np.zeros((2, 3, 3)) + np.arange(3))
        assert sample_points(p, 8).shape == (64, 3)

    def test_too_few_samples(self):
        with pytest.raises(InvalidInputError):
            sample_points(line_segment((0, 0), (1, 0)), 1)


class TestPrimitives:
    def test_circle_arc_points_on_circle(self):
        p = circle_arc((0.3, -0.2), 1.7, 0.4, 2.9)
        pts = sample_points(p, 50)
        r = np.hypot(pts[:, 0] - 0.3, pts[:, 1] + 0.2)
        assert np.max(np.abs(r - 1.7)) < 1e-13

    def test_circle_arc_span_limit(self):
        with pytest.raises(InvalidInputError):
            circle_arc((0, 0), 1.0, 0.0, math.pi)

    @pytest.mark.parametrize("span", [math.pi / 8, math.pi / 4, math.pi / 2])
    def test_cubic_arc_radial_error(self, span):
        pts = sample_points(cubic_circle_arc((0, 0), 1.0, 0.2, 0.2 + span), 400)
        assert np.max(np.abs(np.hypot(*pts.T) - 1.0)) < 5e-4

    def test_cubic_arc_endpoint_tangents(self):
        p = cubic_circle_arc((0, 0), 2.0, 0.0, math.pi / 2)
        d0 = p.control_points[1] - p.control_points[0]
        assert abs(d0[0]) < 1e-15 and d0[1] > 0

    def test_parabola_and_hyperbola(self):
        pts = sample_points(parabola_segment(-0.7, 1.3), 30)
        assert np.max(np.abs(pts[:, 1] - pts[:, 0] ** 2)) < 1e-14
        pts = sample_points(hyperbola_segment(-0.8, 1.1), 30)
        assert np.max(np.abs(pts[:, 0] ** 2 - pts[:, 1] ** 2 - 1)) < 1e-13
        assert np.all(pts[:, 0] > 0)

    def test_hyperbola_midpoint_hits_middle_parameter(self):
        u0, u1 = -0.5, 1.2
        mid = evaluate_patch(hyperbola_segment(u0, u1), 0.5)
        um = 0.5 * (u0 + u1)
        np.testing.assert_allclose(mid, [math.cosh(um), math.sinh(um)], atol=1e-14)

    def test_full_circle_is_closed_composite(self):
        c = full_circle((1, 1), 0.5)
        assert isinstance(c, CompositeCurve) and len(c.pieces) == 4
        pts = sample_points(c, 33)
        assert np.max(np.abs(np.hypot(pts[:, 0] - 1, pts[:, 1] - 1) - 0.5)) < 1e-13
        np.testing.assert_allclose(pts[0], pts[-1], atol=1e-15)
        np.testing.assert_allclose(evaluate_patch(c, 2.5), evaluate_patch(c.pieces[2], 0.5))


class TestTransforms:
    def test_commutes_with_sampling(self, rng):
        for _ in range(30):
            p = _random_patch(rng, int(rng.integers(1, 3)))
            n = p.ambient_dim
            A = rng.normal(size=(n, n)) + 2 * np.eye(n)
            m = AffineMap(A, rng.normal(size=n))
            np.testing.assert_allclose(
                sample_points(transform_patch(p, m), 7), m(sample_points(p, 7)), atol=1e-13
            )

    def test_composite_transform(self):
        c = full_circle((0, 0), 1.0)
        m = AffineMap.translation([2.0, -1.0])
        np.testing.assert_allclose(sample_points(transform_patch(c, m), 9), sample_points(c, 9) + [2, -1])

    def test_singular_and_mismatched(self):
        with pytest.raises(InvalidTransformError):
            AffineMap(np.zeros((2, 2)), np.zeros(2))
        with pytest.raises(InvalidTransformError):
            transform_patch(line_segment((0, 0), (1, 0)), AffineMap.identity(3))

    def test_then_composes_in_order(self):
        a = AffineMap.rotation(0.3)
        b = AffineMap.translation([1.0, 2.0])
        x = np.array([[0.5, -0.25]])
        np.testing.assert_allclose(a.then(b)(x), b(a(x)))

    def test_restrict_lies_on_original(self, rng):
        for _ in range(20):
            p = _random_patch(rng, 1)
            a, b = np.sort(rng.uniform(0, 1, 2))
            sub = restrict_patch(p, ((a, b),))
            for t in np.linspace(0, 1, 7):
                s = a + t * (b - a)
                np.testing.assert_allclose(evaluate_patch(sub, s), evaluate_patch(p, s), atol=1e-12)

    def test_restrict_surface(self, rng):
        p = _random_patch(rng, 2)
        sub = restrict_patch(p, ((0.2, 0.7), (0.1, 0.5)))
        np.testing.assert_allclose(evaluate_patch(sub, (0.3, 0.4)), evaluate_patch(p, (0.3, 0.4)), atol=1e-12)
        with pytest.raises(DomainError):
            restrict_patch(p, ((0.5, 1.5), (0, 1)))


class TestRescale:
    def test_fixed_point(self):
        ds = LabeledDataset([line_segment((-1, -1), (1, 1)), line_segment((-1, 1), (1, -1))])
        out = rescale_to_unit_box(ds)
        for a, b in zip(ds.patches, out.patches):
            np.testing.assert_allclose(a.control_points, b.control_points, atol=1e-14)

    def test_segment_length_two(self):
        out = rescale_to_unit_box(LabeledDataset([line_segment((0, 0), (10, 0))]))
        cp = out.patches[0].control_points
        assert np.linalg.norm(cp[1] - cp[0]) == pytest.approx(2.0, abs=1e-14)

    def test_fits_box_on_random_data(self):
        for seed in range(10):
            ds = generate_conic_family(4, (2, 4), seed, rescale=False)
            out = rescale_to_unit_box(ds)
            pts = np.vstack([sample_points(p, 64) for p in out.patches])
            assert np.max(np.abs(pts)) <= 1 + 1e-12

    def test_degenerate(self):
        pts = PointCloud(np.ones((4, 2)))
        with pytest.raises(InvalidInputError):
            rescale_to_unit_box(CloudDataset([pts]))
        with pytest.raises(InvalidInputError):
            rescale_to_unit_box(LabeledDataset([]))


class TestLabels:
    def test_normalization(self):
        c = normalize_coefficients([0.0, -3.0, 4.0])
        np.testing.assert_allclose(c, [0.0, 0.6, -0.8])

    def test_dedup_opposite_rays(self):
        labels = labels_from_coefficients(
            [line_coefficients((0, 0), (1, 1)), line_coefficients((0, 0), (-2, -2)), circle_coefficients((0, 0), 1)]
        )
        assert labels == [0, 0, 1]


class TestGenerators:
    @pytest.mark.parametrize("teeth,count", [(2, 9), (3, 13), (4, 17), (8, 33), (128, 513)])
    def test_gear_patch_counts(self, teeth, count):
        assert len(generate_gear(teeth)) == count

    def test_gear_labels_match_bruteforce_dedup(self, gear8):
        # oracle: recover each patch's primitive from geometry alone
        keys = []
        for p, m in zip(gear8.patches, gear8.truth_degrees):
            pts = sample_points(p, 9)
            if m == 1:
                d = (pts[-1] - pts[0]) / np.linalg.norm(pts[-1] - pts[0])
                if d[1] < -1e-12 or (abs(d[1]) <= 1e-12 and d[0] < 0):
                    d = -d
                keys.append(("line", round(d[0], 9) + 0.0, round(d[1], 9) + 0.0))
            else:
                keys.append(("circle", round(float(np.mean(np.hypot(*pts.T))), 9)))
        expect = {}
        oracle = [expect.setdefault(k, len(expect)) for k in keys]
        assert len(set(gear8.truth_labels)) == len(expect) == 11
        t = np.array(gear8.truth_labels)
        o = np.array(oracle)
        assert np.array_equal(t[:, None] == t[None, :], o[:, None] == o[None, :])

    def test_gear_exact_arcs_on_circles(self, gear8):
        for p, m in zip(gear8.patches, gear8.truth_degrees):
            if m == 2:
                r = np.hypot(*sample_points(p, 40).T)
                assert np.ptp(r) < 1e-13
                assert min(abs(r[0] - R) for R in (1.0, 1.5, 2.0)) < 1e-13

    def test_gear_cubic_mode(self):
        g = generate_gear(8, "cubic_bezier")
        assert len(g) == 33 and all(not p.is_rational for p in g.patches[:-1])
        with pytest.raises(InvalidInputError):
            generate_gear(1)
        with pytest.raises(InvalidInputError):
            generate_gear(8, "spline")

    def test_conic_family_labels_and_degrees(self):
        ds = generate_conic_family(5, (2, 4), seed=4)
        assert len(set(ds.truth_labels)) == 5
        assert set(ds.truth_degrees) <= {1, 2}
        single = generate_conic_family(1, (2, 4), seed=0)
        assert len(set(single.truth_labels)) == 1

    def test_bezier_family_degree(self):
        ds = generate_bezier_family(3, 2, (2, 3), seed=1)
        assert set(ds.truth_degrees) == {3}

    def test_determinism(self):
        a = generate_conic_family(4, (2, 4), seed=7)
        b = generate_conic_family(4, (2, 4), seed=7)
        for p, q in zip(a.patches, b.patches):
            assert p.control_points.tobytes() == q.control_points.tobytes()
        s1 = generate_quadric_surfaces({"plane", "sphere"}, 3, seed=2)
        s2 = generate_quadric_surfaces({"plane", "sphere"}, 3, seed=2)
        assert all(p.control_points.tobytes() == q.control_points.tobytes() for p, q in zip(s1.patches, s2.patches))

    def test_plane_split_into_four(self):
        ds = generate_surface_primitives(["plane"], seed=0, splits=(2, 2))
        assert len(ds) == 4 and set(ds.truth_labels) == {0} and set(ds.truth_degrees) == {1}

    def test_sphere_samples_on_quadric(self):
        ds = generate_surface_primitives(["sphere"], seed=5, splits=(2, 2), rescale=False)
        pts = np.vstack([sample_points(p, 8) for p in ds.patches])
        # fit centre and radius from four points, then check every point
        A = np.column_stack([2 * pts, np.ones(len(pts))])
        sol, *_ = np.linalg.lstsq(A, np.sum(pts**2, axis=1), rcond=None)
        c = sol[:3]
        r2 = sol[3] + c @ c
        assert np.max(np.abs(np.sum((pts - c) ** 2, axis=1) - r2)) < 1e-12

    def test_quadric_count_validation(self):
        with pytest.raises(InvalidInputError):
            generate_quadric_surfaces({"plane"}, 0)


class TestNoise:
    def test_zero_noise_identical(self, gear8):
        a = add_noise(gear8, 0.0, seed=1, samples_per_dim=17)
        b = sample_dataset(gear8, 17)
        assert all(np.array_equal(x.points, y.points) for x, y in zip(a.clouds, b.clouds))

    def test_deterministic_and_scaled(self, gear8):
        a = add_noise(gear8, 1e-3, seed=3, samples_per_dim=17)
        b = add_noise(gear8, 1e-3, seed=3, samples_per_dim=17)
        clean = sample_dataset(gear8, 17)
        assert all(np.array_equal(x.points, y.points) for x, y in zip(a.clouds, b.clouds))
        diff = np.vstack([x.points - y.points for x, y in zip(a.clouds, clean.clouds)])
        assert 0.8e-3 < diff.std() < 1.2e-3

    def test_negative_sigma(self, gear8):
        with pytest.raises(InvalidInputError):
            add_noise(gear8, -1.0, 0, 17)


@settings(max_examples=40, deadline=None)
@given(
    theta=st.floats(0, 2 * math.pi),
    scale=st.floats(0.1, 10),
    shift=st.tuples(st.floats(-5, 5), st.floats(-5, 5)),
    t=st.floats(0, 1),
)
def test_transform_commutes_with_evaluation(theta, scale, shift, t):
    p = circle_arc((0.2, 0.1), 1.3, 0.1, 2.0)
    m = AffineMap.rotation(theta).then(AffineMap.scaling([scale, scale])).then(AffineMap.translation(shift))
    lhs = evaluate_patch(transform_patch(p, m), t)
    rhs = m(evaluate_patch(p, t)[None])[0]
    assert np.allclose(lhs, rhs, atol=1e-12 * max(1.0, scale))
