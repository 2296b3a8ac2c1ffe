"""Point-level conformal maps: inversions, reflections, the Cayley map."""

import numpy as np
import pytest

from invpos.geometry import (
    Ball,
    HalfSpace,
    cayley_point,
    cayley_singular_point,
    invert_point,
    reflect_point,
)


def test_inversion_is_an_involution():
    rng = np.random.default_rng(7)
    b = Ball(center=np.array([0.5, -1.0, 2.0]), radius=1.7)
    pts = rng.normal(size=(50, 3)) * 3.0 + b.center
    twice = invert_point(b, invert_point(b, pts))
    assert np.allclose(twice, pts, atol=1e-12)


def test_inversion_fixes_the_sphere():
    b = Ball(center=np.array([1.0, 0.0]), radius=2.0)
    angles = np.linspace(0.0, 2.0 * np.pi, 17)
    sphere = b.center + b.radius * np.stack([np.cos(angles), np.sin(angles)], axis=-1)
    assert np.allclose(invert_point(b, sphere), sphere, atol=1e-12)


def test_inversion_swaps_inside_and_outside():
    b = Ball(center=np.zeros(2), radius=1.0)
    outside = np.array([[3.0, 4.0]])
    image = invert_point(b, outside)
    assert np.linalg.norm(image) < 1.0
    # |x| |Theta x| = r^2 for a centered ball
    assert np.isclose(np.linalg.norm(outside) * np.linalg.norm(image), 1.0)


def test_reflection_is_an_involution_and_fixes_the_plane():
    h = HalfSpace(normal=np.array([1.0, 1.0]) / np.sqrt(2.0), offset=0.5)
    rng = np.random.default_rng(11)
    pts = rng.normal(size=(30, 2))
    assert np.allclose(reflect_point(h, reflect_point(h, pts)), pts, atol=1e-12)
    on_plane = np.array([[0.5 * np.sqrt(2.0), 0.0], [0.0, 0.5 * np.sqrt(2.0)]])
    assert np.allclose(reflect_point(h, on_plane), on_plane, atol=1e-12)


def test_reflection_reverses_signed_distance():
    h = HalfSpace(normal=np.array([0.0, 1.0]), offset=-1.0)
    p = np.array([[2.0, 3.0]])
    q = reflect_point(h, p)
    assert np.isclose(q[0, 1] - (-1.0), -(p[0, 1] - (-1.0)))
    assert np.isclose(q[0, 0], p[0, 0])


def test_cayley_map_is_involutive_away_from_its_pole():
    rng = np.random.default_rng(3)
    pts = rng.normal(size=(40, 3))
    pole = cayley_singular_point(3)
    pts = pts[np.linalg.norm(pts - pole, axis=-1) > 0.3]
    assert np.allclose(cayley_point(cayley_point(pts)), pts, atol=1e-9)


def test_cayley_map_exchanges_ball_and_halfspace():
    # The map conjugates the unit sphere to a hyperplane: points of the unit
    # sphere (minus the pole) land on a common affine hyperplane.
    angles = np.linspace(0.1, 2.0 * np.pi - 0.1, 25)
    sphere = np.stack([np.cos(angles), np.sin(angles)], axis=-1)
    image = cayley_point(sphere)
    # Fit a hyperplane through the first two image points and check the rest.
    d = image[1] - image[0]
    normal = np.array([-d[1], d[0]])
    normal /= np.linalg.norm(normal)
    offsets = (image - image[0]) @ normal
    assert np.max(np.abs(offsets)) < 1e-9


def test_region_contains():
    b = Ball(center=np.zeros(1), radius=1.0)
    assert bool(b.contains(np.array([[0.5]]))[0])
    assert not bool(b.contains(np.array([[1.5]]))[0])
    h = HalfSpace(normal=np.array([1.0]), offset=0.0)
    assert bool(h.contains(np.array([[0.5]]))[0])
    assert not bool(h.contains(np.array([[-0.5]]))[0])


def test_ball_validation():
    with pytest.raises(ValueError):
        Ball(center=np.zeros(2), radius=-1.0)
