import numpy as np
import pytest

from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from .errors import VertexCapError
from .core import SlopePattern, enumerate_patterns, pattern, directional_derivative, limiting_pattern
from .geometry import VertexPolytope, SubdifferentialSpec, subdiff_vertices, subdiff_membership, \
    dual_ball_membership, hull_membership, nearest_point, hausdorff_distance, affine_dimension, \
    dimension_bound, dimension_is_full, local_norm, attainable, perturbation_distances


def _strict_lambda(p):

    # Distinct values keep the LP and majorization tests away from degenerate faces.
    return arrays('float64', p, elements=st.integers(min_value=1, max_value=40), unique=True).map(
        lambda a: np.sort(a)[::-1] / 10.0)


def test_vertex_enumeration():

    lam = [2.0, 1.0]

    ball = subdiff_vertices(SubdifferentialSpec(lam, [0, 0]))

    assert len(ball) == 8
    assert (2.0, -1.0) in ball.vertex_set()
    assert (-1.0, 2.0) in ball.vertex_set()

    segment = subdiff_vertices(SubdifferentialSpec(lam, [1, 1]))

    assert segment.vertex_set() == {(2.0, 1.0), (1.0, 2.0)}

    point = subdiff_vertices(SubdifferentialSpec(lam, [2, -1]))

    assert point.vertex_set() == {(2.0, -1.0)}


def test_vertex_cap():

    spec = SubdifferentialSpec(np.linspace(3.0, 1.0, 6), [0] * 6)

    assert spec.vertex_count() == 2 ** 6 * 720

    with pytest.raises(VertexCapError):
        subdiff_vertices(spec, cap=1000)


def test_membership_examples():

    spec = SubdifferentialSpec([2.0, 1.0], [1, 1])

    assert subdiff_membership(spec, [1.5, 1.5])
    assert not subdiff_membership(spec, [2.0, 0.5])
    assert not subdiff_membership(spec, [2.5, 0.5])

    assert dual_ball_membership([2.0, 1.0], [1.5, -1.5])
    assert not dual_ball_membership([2.0, 1.0], [2.5, 0.0])


@settings(max_examples=200, deadline=None)
@given(st.integers(min_value=1, max_value=4).flatmap(
    lambda p: st.tuples(_strict_lambda(p),
                        st.sampled_from(enumerate_patterns(p)),
                        arrays('float64', p, elements=st.floats(min_value=-4, max_value=4)))))
def test_majorization_agrees_with_hull_lp(instance):

    lam, p, v = instance

    spec = SubdifferentialSpec(lam, p)
    polytope = subdiff_vertices(spec)

    __, distance = nearest_point(polytope, v)

    if distance > 1e-5:

        assert not subdiff_membership(spec, v)
        assert not hull_membership(polytope, v)

    elif distance < 1e-10:

        assert subdiff_membership(spec, v, tol=1e-7)
        assert hull_membership(polytope, v)


@settings(max_examples=100, deadline=None)
@given(st.integers(min_value=1, max_value=4).flatmap(
    lambda p: st.tuples(_strict_lambda(p), st.sampled_from(enumerate_patterns(p)))),
    st.integers(min_value=0, max_value=2 ** 31 - 1))
def test_convex_combinations_are_members(instance, seed):

    lam, p = instance

    spec = SubdifferentialSpec(lam, p)
    polytope = subdiff_vertices(spec)

    weights = np.random.default_rng(seed).dirichlet(np.ones(len(polytope)))

    assert subdiff_membership(spec, weights.dot(polytope.vertices), tol=1e-8)


def test_affine_dimension_matches_bound_exhaustively():

    for lam in ([3.0, 2.0, 1.0], [2.0, 2.0, 1.0], [1.0, 1.0, 1.0], [2.0, 1.0, 0.0]):

        for p in enumerate_patterns(3):

            polytope = subdiff_vertices(SubdifferentialSpec(lam, p))
            dimension = affine_dimension(polytope)

            assert dimension <= dimension_bound(p)
            assert (dimension == dimension_bound(p)) == dimension_is_full(lam, p)


def test_dimension_examples():

    assert dimension_bound(SlopePattern([0, 0])) == 2
    assert dimension_bound(SlopePattern([1, 1])) == 1
    assert dimension_bound(SlopePattern([2, 1])) == 0

    assert dimension_is_full([2.0, 1.0], [1, 1])
    assert not dimension_is_full([1.0, 1.0], [1, 1])


@settings(max_examples=100, deadline=None)
@given(st.integers(min_value=1, max_value=4).flatmap(
    lambda p: st.tuples(_strict_lambda(p),
                        arrays('float64', p, elements=st.sampled_from([0.0, 1.0, -1.0, 2.0])),
                        arrays('float64', p, elements=st.floats(min_value=-3, max_value=3)))))
def test_local_norm_is_the_directional_derivative(instance):

    lam, beta0, u = instance

    spec = SubdifferentialSpec(lam, pattern(beta0))

    assert local_norm(spec, u) == pytest.approx(directional_derivative(lam, beta0, u), abs=1e-9)

    polytope = subdiff_vertices(spec)

    assert local_norm(spec, u) == pytest.approx(float(np.max(polytope.vertices.dot(u))), abs=1e-9)


def test_nearest_point():

    square = VertexPolytope([[1.0, 1.0], [1.0, -1.0], [-1.0, 1.0], [-1.0, -1.0]])

    point, distance = nearest_point(square, [3.0, 0.5])

    np.testing.assert_allclose(point, [1.0, 0.5], atol=1e-8)
    assert distance == pytest.approx(2.0, abs=1e-8)

    point, distance = nearest_point(square, [0.2, 0.3])

    assert distance == pytest.approx(0.0, abs=1e-8)


def test_hausdorff_distance_of_translated_segments():

    a = VertexPolytope([[2.0, 1.0], [1.0, 2.0]])

    assert hausdorff_distance(a, a.translated([0.5, 0.5])) == pytest.approx(np.sqrt(0.5), abs=1e-8)
    assert hausdorff_distance(a, a) == pytest.approx(0.0, abs=1e-10)


def test_hausdorff_distance_against_grid_oracle():

    lam = np.array([2.0, 1.0])
    shifted = lam + 0.3

    a = subdiff_vertices(SubdifferentialSpec(lam, [0, 0]))
    b = subdiff_vertices(SubdifferentialSpec(shifted, [0, 0]))

    # Dense boundary samples of the two octagons.
    def boundary(polytope):

        vertices = polytope.vertices
        angles = np.arctan2(vertices[:, 1], vertices[:, 0])
        ordered = vertices[np.argsort(angles)]

        t = np.linspace(0.0, 1.0, 201)[:, None]

        return np.vstack([(1.0 - t) * ordered[i] + t * ordered[(i + 1) % len(ordered)]
                          for i in range(len(ordered))])

    def directed(points, polytope):
        return max(nearest_point(polytope, x)[1] for x in points)

    grid = max(directed(boundary(a), b), directed(boundary(b), a))

    assert hausdorff_distance(a, b) == pytest.approx(grid, abs=1e-6)


def test_perturbation_distances_decrease_within_bound():

    rows = perturbation_distances([2.0, 1.0], [0, 0], [1, 10, 100])

    distances = [d for __, d, __ in rows]

    assert [n for n, __, __ in rows] == [1, 10, 100]
    assert distances[0] > distances[1] > distances[2]
    assert all(d <= b + 1e-7 for __, d, b in rows)

    # A cluster segment is translated along (1, 1) by exactly lambda_n - lambda.
    for n, d, b in perturbation_distances([2.0, 1.0], [1, 1], [1, 10, 100]):
        assert d == pytest.approx(b, abs=1e-7)


@settings(max_examples=10, deadline=None)
@given(st.integers(min_value=1, max_value=4).flatmap(
    lambda p: st.tuples(_strict_lambda(p), st.sampled_from(enumerate_patterns(p)))))
def test_perturbation_distances_for_random_patterns(instance):

    lam, p = instance

    rows = perturbation_distances(lam, p, [1, 10, 100, 1000])

    assert all(d <= b + 1e-7 for __, d, b in rows)
    assert all(rows[i][1] >= rows[i+1][1] - 1e-10 for i in range(3))


def test_attainability_examples():

    # Strictly decreasing lambda at beta0 = 0: every pattern is attainable.
    assert all(attainable([2.0, 1.0], [0.0, 0.0], p) for p in enumerate_patterns(2))

    # Equal penalties cannot produce ties.
    assert not attainable([1.0, 1.0], [0.0, 0.0], [1, 1])
    assert not attainable([1.0, 1.0], [0.0, 0.0], [1, -1])
    assert attainable([1.0, 1.0], [0.0, 0.0], [1, 0])
    assert attainable([1.0, 1.0], [0.0, 0.0], [0, 0])

    # Zeros of the limit only where beta0 is zero, and no sign change inside a cluster of beta0.
    assert not attainable([2.0, 1.0], [1.0, 1.0], [0, 1])
    assert not attainable([2.0, 1.0], [1.0, 1.0], [1, -1])
    assert attainable([2.0, 1.0], [1.0, 1.0], [2, 1])
    assert attainable([2.0, 1.0], [1.0, 1.0], [1, 1])

    # A pattern never splits ties it cannot see: beta0 = (1, 2) fixes the order.
    assert not attainable([2.0, 1.0], [1.0, 2.0], [1, 1])


def test_limiting_pattern_of_attainable_pattern_is_itself():

    for p in enumerate_patterns(2):

        if attainable([2.0, 1.0], [0.0, 0.0], p):
            assert limiting_pattern([0.0, 0.0], p.entries) == p


def _polytopes(count):

    def build(dimension):

        cloud = st.integers(min_value=1, max_value=6).flatmap(
            lambda n: arrays('float64', (n, dimension), elements=st.floats(min_value=-3, max_value=3)))

        return st.tuples(*[cloud] * count)

    return st.integers(min_value=1, max_value=4).flatmap(build)


@settings(max_examples=60, deadline=None)
@given(_polytopes(3))
def test_hausdorff_distance_is_a_metric(clouds):

    a, b, c = [VertexPolytope(cloud) for cloud in clouds]

    ab = hausdorff_distance(a, b)

    assert ab >= 0.0
    assert ab == pytest.approx(hausdorff_distance(b, a), abs=1e-7)
    assert hausdorff_distance(a, a) == pytest.approx(0.0, abs=1e-7)

    assert hausdorff_distance(a, c) <= ab + hausdorff_distance(b, c) + 1e-3


@settings(max_examples=200, deadline=None)
@given(st.integers(min_value=1, max_value=6).flatmap(
    lambda p: st.tuples(_strict_lambda(p),
                        arrays('float64', p, elements=st.floats(min_value=-4, max_value=4)),
                        arrays('float64', p, elements=st.floats(min_value=0, max_value=1)))))
def test_dual_ball_is_monotone_in_magnitudes(instance):

    lam, v, factors = instance

    shrunk = v * factors

    if dual_ball_membership(lam, v):
        assert dual_ball_membership(lam, shrunk)

    if not dual_ball_membership(lam, shrunk):
        assert not dual_ball_membership(lam, v)


@pytest.mark.parametrize('p', [1, 2, 3, 4])
def test_vectors_with_equal_patterns_share_vertices(p):

    rng = np.random.default_rng(p)

    lam = np.arange(p, 0, -1) + 0.5

    for patt in enumerate_patterns(p):

        entries = patt.entries
        levels = np.sort(rng.uniform(0.5, 5.0, size=p))

        # Two different magnitude assignments that keep the ranks.
        first = np.sign(entries) * np.r_[0.0, levels][np.abs(entries)]
        second = np.sign(entries) * np.r_[0.0, 10.0 * np.arange(1, p + 1)][np.abs(entries)]

        assert pattern(first) == pattern(second) == patt

        one = subdiff_vertices(SubdifferentialSpec.from_vector(lam, first))
        two = subdiff_vertices(SubdifferentialSpec.from_vector(lam, second))

        assert one.vertex_set() == two.vertex_set()
