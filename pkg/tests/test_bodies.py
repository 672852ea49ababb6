import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from maxintpos import (AllSpace, Ball, Ellipsoid, HPolytope, Region, affine_image, box, classify, cube,
                       gauge, outward_normal, regular_polygon, surface_sample)
from maxintpos.errors import InputError, InvalidBodyError, PreconditionError, UnsupportedBodyError


# -- gauge / classify / normal examples --------------------------------------

def test_gauge_examples():
    assert gauge(Ball(1.0), [2.0, 0.0]) == pytest.approx(2.0)
    assert gauge(cube(1.0, 2), [0.5, 0.25]) == pytest.approx(0.5)
    assert gauge(Ellipsoid(np.diag([2.0, 1.0])), [2.0, 0.0]) == pytest.approx(1.0)
    assert gauge(AllSpace(2), [5.0, -3.0]) == 0.0


def test_gauge_dimension_mismatch():
    with pytest.raises(InputError):
        gauge(Ball(1.0, 2), [1.0, 0.0, 0.0])


def test_degenerate_ellipsoid_is_invalid():
    with pytest.raises(InvalidBodyError):
        Ellipsoid(np.array([[1.0, 2.0], [0.5, 1.0]]))


def test_polytope_needs_origin_inside():
    with pytest.raises(InvalidBodyError):
        HPolytope([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]], [1.0, 0.0, 1.0, 1.0])


def test_classify_examples():
    assert classify(Ball(1.0), [0.0, 0.0], 1e-9) == Region.INTERIOR
    assert classify(Ball(1.0), [1.0, 0.0], 1e-9) == Region.BOUNDARY
    assert classify(cube(1.0, 2), [1.5, 0.0], 1e-9) == Region.EXTERIOR
    assert classify(AllSpace(2), [1e6, 0.0]) == Region.INTERIOR


def test_normal_examples():
    assert np.allclose(outward_normal(Ball(1.0), [0.0, 1.0]), [0.0, 1.0])
    assert np.allclose(outward_normal(cube(1.0, 2), [1.0, 0.3]), [1.0, 0.0])
    assert np.allclose(outward_normal(Ellipsoid(np.diag([2.0, 1.0])), [2.0, 0.0]), [1.0, 0.0])


def test_normal_off_boundary_raises():
    with pytest.raises(PreconditionError):
        outward_normal(Ball(1.0), [0.5, 0.0])


def test_polytope_corner_uses_lowest_index_facet():
    K = cube(1.0, 2)
    n = K.outward_normal([1.0, 1.0])
    idx = int(np.argmax(K.rows @ n))
    assert np.allclose(n, K.rows[idx] / np.linalg.norm(K.rows[idx]))
    assert idx == min(i for i in range(len(K.rows)) if abs(K.rows[i] @ [1.0, 1.0] - K.offsets[i]) < 1e-12)


@pytest.mark.parametrize("body, x", [
    (Ball(1.3, 2), [0.6, 1.153]),
    (Ellipsoid(np.array([[2.0, 0.3], [0.1, 0.7]])), [1.0, 0.4]),
    (Ball(1.0, 3), [0.3, -0.5, 0.2]),
])
def test_normal_parallel_to_gauge_gradient(body, x):
    x = np.asarray(x, dtype=float)
    x = x / body.gauge(x)
    h = 1e-6
    fd = np.array([(body.gauge(x + h * e) - body.gauge(x - h * e)) / (2 * h) for e in np.eye(len(x))])
    n = body.outward_normal(x)
    assert np.linalg.norm(fd / np.linalg.norm(fd) - n) <= 1e-6


# -- affine images -------------------------------------------------------------

def test_affine_image_examples():
    B2 = affine_image(Ball(1.0), 2.0 * np.eye(2))
    assert isinstance(B2, Ball) and B2.radius == pytest.approx(2.0)
    moved = affine_image(cube(1.0, 2), np.eye(2), [3.0, 0.0])
    assert moved.classify([3.0, 0.0]) == Region.INTERIOR
    assert affine_image(Ball(1.0), np.diag([2.0, 1.0])).gauge([2.0, 0.0]) == pytest.approx(1.0)


def test_affine_image_singular_matrix():
    with pytest.raises(InputError):
        affine_image(Ball(1.0), np.zeros((2, 2)))


def test_affine_polytope_gauge_matches_base():
    T = np.array([[1.2, 0.4], [-0.3, 0.9]])
    K = affine_image(cube(1.0, 2), T)
    x = np.array([0.7, -0.2])
    assert K.gauge(x) == pytest.approx(cube(1.0, 2).gauge(np.linalg.solve(T, x)))


def test_shifted_gauge_is_not_formed():
    K = affine_image(cube(1.0, 2), np.eye(2), [0.5, 0.0])
    with pytest.raises(PreconditionError):
        K.gauge([0.1, 0.0])


# -- surface sampling -----------------------------------------------------------

def test_ball_total_area_exact():
    s = surface_sample(Ball(1.0), 100_000, seed=3)
    assert s.total() == pytest.approx(2 * np.pi, rel=1e-12)


def test_cube_total_area_exact():
    s = surface_sample(cube(1.0, 3), 100_000, seed=3)
    assert s.total() == pytest.approx(24.0, rel=1e-12)


def _ellipse_perimeter(a, b):
    return integrate.quad(lambda t: np.hypot(a * np.sin(t), b * np.cos(t)), 0, 2 * np.pi, epsabs=1e-13)[0]


def test_ellipse_perimeter_matches_quadrature():
    ref = _ellipse_perimeter(2.0, 1.0)
    assert ref == pytest.approx(9.688448, abs=1e-6)
    s = surface_sample(Ellipsoid(np.diag([2.0, 1.0])), 1_000_000, seed=1)
    se = np.std(s.weights, ddof=1) * np.sqrt(len(s.weights))
    assert abs(s.total() - ref) <= 3 * se


def test_surface_sample_invariants():
    for body in (Ball(1.5, 3), cube(1.0, 2), Ellipsoid(np.diag([2.0, 0.5])), regular_polygon(6)):
        s = body.surface_sample(5000, seed=7)
        assert np.all(np.abs(np.linalg.norm(s.normals, axis=1) - 1) <= 1e-12)
        assert np.all(np.einsum("ij,ij->i", s.normals, s.points) > 0)
        assert np.all(np.abs(body.gauge(s.points) - 1) <= 1e-9)
        assert np.all(s.weights > 0)


def test_sphere_flux_equals_area():
    s = surface_sample(Ball(1.0, 3), 200_000, seed=5)
    vals = np.einsum("ij,ij->i", s.normals, s.points)
    est, se = s.integrate(vals)
    assert abs(est - 4 * np.pi) <= 3 * se + 1e-9


def test_affine_covariance_of_surface_integrals():
    T = np.array([[1.4, 0.3], [0.0, 0.8]])
    K = affine_image(cube(1.0, 2), T)
    h = lambda x: 1.0 + x[:, 0] ** 2 - 0.5 * x[:, 1]
    direct = K.surface_sample(400_000, seed=11)
    base = cube(1.0, 2).surface_sample(400_000, seed=12)
    cof = np.linalg.norm(np.linalg.inv(T).T @ base.normals.T, axis=0) * abs(np.linalg.det(T))
    mapped = base.points @ T.T
    a = np.sum(direct.weights * h(direct.points))
    b = np.sum(base.weights * cof * h(mapped))
    se = np.hypot(np.std(direct.weights * h(direct.points)) * np.sqrt(len(direct.weights)),
                  np.std(base.weights * cof * h(mapped)) * np.sqrt(len(base.weights)))
    assert abs(a - b) <= 3 * se


def test_surface_sample_deterministic_across_workers():
    K = Ellipsoid(np.array([[1.5, 0.2], [0.0, 0.7]]))
    a = K.surface_sample(50_000, seed=9, workers=1)
    b = K.surface_sample(50_000, seed=9, workers=8)
    assert np.array_equal(a.points, b.points) and np.array_equal(a.weights, b.weights)


def test_unbounded_surface_sample_unsupported():
    with pytest.raises(UnsupportedBodyError):
        AllSpace(2).surface_sample(10, seed=0)


def test_volumes_and_areas():
    assert cube(1.0, 3).volume() == pytest.approx(8.0)
    assert cube(1.0, 3).surface_area() == pytest.approx(24.0)
    assert Ball(2.0, 2).volume() == pytest.approx(4 * np.pi)
    assert box([2.0, 1.0]).volume() == pytest.approx(8.0)


@settings(max_examples=60, deadline=None)
@given(st.floats(0.0, 50.0), st.lists(st.floats(-3, 3), min_size=2, max_size=2))
def test_gauge_positively_homogeneous(lam, x):
    x = np.asarray(x)
    for K in (Ball(0.7), cube(1.3, 2), Ellipsoid(np.array([[2.0, 0.5], [0.0, 1.0]])), regular_polygon(5)):
        assert K.gauge(lam * x) == pytest.approx(lam * K.gauge(x), rel=1e-10, abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(-2, 2), min_size=2, max_size=2))
def test_classification_matches_gauge(x):
    K = regular_polygon(7, 1.0, 0.2)
    g = K.gauge(np.asarray(x))
    r = K.classify(np.asarray(x))
    if abs(g - 1) <= 1e-9:
        assert r == Region.BOUNDARY
    elif g < 1:
        assert r == Region.INTERIOR
    else:
        assert r == Region.EXTERIOR
