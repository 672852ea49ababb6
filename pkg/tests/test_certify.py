import numpy as np
import pytest
from scipy import integrate

from maxintpos import (Ball, HPolytope, OptimizeConfig, Position, affine_image, box, cube,
                       geometric_certificate, indicator, isotropy_certificate, john_limit_measure,
                       regular_polygon, sphere_restricted_certificate, standard_gaussian)
from maxintpos.certify import boundary_measure
from maxintpos.errors import EmptyRegionError, PreconditionError


def test_cube_ball_certificate():
    cert = isotropy_certificate(indicator(cube(2.0, 2)), indicator(Ball(1.0)), budget=400_000)
    assert cert.passed and not cert.degenerate
    assert np.all(np.abs(cert.M - np.pi * np.eye(2)) <= 3 * cert.M_stderr + 1e-12)
    assert np.all(cert.b == 0)


def test_gaussian_certificate():
    G = standard_gaussian(2)
    cert = isotropy_certificate(G, G, budget=200_000)
    assert cert.passed
    assert np.all(np.abs(cert.M - np.pi / 2 * np.eye(2)) <= 3 * cert.M_stderr + 1e-9)


def test_displaced_ball_fails_centering():
    g = indicator(Ball(1.0)).pullback(Position(np.eye(2), [0.5, 0.0], "unit"))
    cert = isotropy_certificate(indicator(cube(1.0, 2)), g, budget=400_000)
    assert not cert.passed
    assert cert.center_residual > 10 * cert.tol


def test_ball_well_inside_cube_stays_centred_when_moved():
    # the whole circle still lies inside [-2, 2]^2, so b stays zero: a shift inside the cube is neutral
    g = indicator(Ball(1.0)).pullback(Position(np.eye(2), [0.5, 0.0], "unit"))
    cert = isotropy_certificate(indicator(cube(2.0, 2)), g, budget=200_000)
    assert cert.center_residual <= 3 * cert.center_stderr + 1e-12


def test_geometric_certificate_examples():
    cert = geometric_certificate(Ball(2.0), Ball(1.0), budget=200_000)
    assert cert.passed
    assert np.all(np.abs(cert.M - np.pi * np.eye(2)) <= 3 * cert.M_stderr + 1e-12)
    t = np.deg2rad(17)
    R = np.array([[np.cos(t), -np.sin(t)], [np.sin(t), np.cos(t)]])
    assert geometric_certificate(affine_image(cube(1.0, 2), R), Ball(0.5), budget=200_000).passed
    cut = HPolytope([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]], [0.6, 1.0, 1.0, 1.0])
    bad = geometric_certificate(cut, Ball(1.0), budget=200_000)
    assert not bad.passed and np.linalg.norm(bad.b) > 10 * np.linalg.norm(bad.b_stderr)


def test_geometric_equals_indicator_certificate():
    K, L = cube(1.0, 2), Ball(0.9)
    a = geometric_certificate(K, L, budget=50_000, seed=3)
    b = isotropy_certificate(indicator(K), indicator(L), budget=50_000, seed=3)
    assert np.array_equal(a.M, b.M) and np.array_equal(a.b, b.b)
    assert a.iso_residual == b.iso_residual and a.passed == b.passed


def test_even_pair_centering_is_exact():
    cert = isotropy_certificate(indicator(cube(1.0, 2)), indicator(Ball(0.9)), budget=50_000)
    assert np.all(cert.b == 0) and cert.center_residual == 0


def test_scale_covariance():
    f = standard_gaussian(2)
    g = indicator(Ball(1.0)).pullback(Position(np.diag([1.2, 1 / 1.2]), [0.1, 0.0], "unit"))
    a = isotropy_certificate(f, g, budget=100_000, seed=1)
    b = isotropy_certificate(f.scaled(3.0), g, budget=100_000, seed=1)
    assert np.allclose(b.M, 3 * a.M, rtol=1e-10) and np.allclose(b.b, 3 * a.b, rtol=1e-10)
    assert b.iso_residual == pytest.approx(a.iso_residual, rel=1e-10)
    assert b.center_residual == pytest.approx(a.center_residual, rel=1e-10)
    assert a.passed == b.passed


def test_degenerate_constant_is_flagged():
    g = indicator(Ball(0.5)).pullback(Position(np.eye(2), [5.0, 0.0], "unit"))
    cert = isotropy_certificate(indicator(cube(1.0, 2)), g, budget=20_000)
    assert cert.degenerate and not cert.passed


def test_certificate_serializes():
    d = isotropy_certificate(standard_gaussian(2), standard_gaussian(2), budget=20_000).to_dict()
    for key in ("M", "C", "b", "iso_residual", "center_residual", "M_stderr", "pass"):
        assert key in d


# -- sphere-restricted measures --------------------------------------------------------------

def test_sphere_restricted_full_circle_passes():
    mu = standard_gaussian(2)
    for K in (Ball(2.0), cube(1.0, 2)):
        cert = sphere_restricted_certificate(mu, K, 1.0, budget=100_000)
        assert cert.passed


def _arc_oracle(half_height):
    """Second-moment matrix of the uniform measure on the unit circle where |sin| <= half_height."""
    a = np.arcsin(half_height)
    arcs = [(-a, a), (np.pi - a, np.pi + a)]
    mass = sum(b - c for c, b in arcs)
    xx = sum(integrate.quad(lambda t: np.cos(t) ** 2, c, b)[0] for c, b in arcs) / mass
    yy = sum(integrate.quad(lambda t: np.sin(t) ** 2, c, b)[0] for c, b in arcs) / mass
    M = np.diag([xx, yy])
    C = np.trace(M) / 2
    return M, np.linalg.norm(M - C * np.eye(2)) / max(C * np.sqrt(2), np.linalg.norm(M))


def test_sphere_restricted_box_fails_with_oracle_residual():
    mu = standard_gaussian(2)
    cert = sphere_restricted_certificate(mu, box([2.0, 0.8]), 1.0, budget=400_000)
    M_ref, iso_ref = _arc_oracle(0.8)
    assert not cert.passed
    assert np.all(np.abs(cert.M - M_ref) <= 3 * cert.M_stderr + 1e-12)
    assert abs(cert.iso_residual - iso_ref) <= 3 * cert.iso_stderr + 1e-12


def test_sphere_restricted_empty_region():
    with pytest.raises(EmptyRegionError):
        sphere_restricted_certificate(standard_gaussian(2), Ball(0.5), 1.0, budget=10_000)


def test_sphere_restricted_needs_symmetry():
    with pytest.raises(PreconditionError):
        sphere_restricted_certificate(standard_gaussian(2), affine_image(Ball(1.0), np.eye(2), [0.2, 0.0]),
                                      1.0, budget=10_000)


# -- limit measures ------------------------------------------------------------------------------

def test_boundary_measure_weights_nonnegative():
    s = boundary_measure(standard_gaussian(2), cube(1.0, 2), 1.1 ** 0.5 * np.eye(2), np.zeros(2), 20_000, 0)
    assert np.all(s.weights >= 0) and s.total > 0
    assert s.probabilities().sum() == pytest.approx(1.0)


def test_john_limit_ball_is_uniform():
    cfg = OptimizeConfig(budget_per_eval=100_000, restarts=1, seed=0)
    steps = john_limit_measure(standard_gaussian(2), Ball(1.0), [1.2, 1.05], budget=100_000, cfg=cfg)
    for s in steps:
        assert s.iso_residual <= 3 * s.iso_stderr + 1e-2
        assert s.support_distance <= 1e-9


def test_john_limit_hexagon_six_contact_points():
    K = regular_polygon(6, 1.0)
    cfg = OptimizeConfig(budget_per_eval=100_000, restarts=1, seed=0)
    steps = john_limit_measure(standard_gaussian(2), K, [1.2, 1.05, 1.02], budget=200_000, cfg=cfg)
    # the six contact directions u_i are at 60 degree spacing; (1/6) sum u_i u_i^T = I/2 exactly
    u = np.array([[np.cos(k * np.pi / 3), np.sin(k * np.pi / 3)] for k in range(6)])
    assert np.allclose(u.T @ u / 6, np.eye(2) / 2)
    assert steps[-1].iso_residual <= 0.05
    assert all(b.support_distance < a.support_distance for a, b in zip(steps, steps[1:]))


def test_john_limit_requires_john_position():
    cfg = OptimizeConfig(budget_per_eval=50_000, restarts=1, seed=0)
    with pytest.raises(PreconditionError):
        john_limit_measure(standard_gaussian(2), box([2.0, 1.0]), [1.1], budget=20_000, cfg=cfg)


def test_john_limit_radii_validation():
    with pytest.raises(PreconditionError):
        john_limit_measure(standard_gaussian(2), cube(1.0, 2), [1.0, 1.1])
