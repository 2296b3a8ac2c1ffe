"""Fractional cell coverage of balls, half-spaces, boxes, and analytic tails."""

import numpy as np

from invpos.coverage import (
    ball_coverage,
    box_coverage,
    grid_mass,
    halfspace_coverage,
    tail_mass_1d,
)
from invpos.fields import ExtremizerSpec, box_grid


def test_ball_coverage_area_2d():
    g = box_grid([-2.0, -2.0], [2.0, 2.0], 256)
    cov = ball_coverage(g, np.array([0.3, -0.2]), 1.1)
    area = grid_mass(g, cov)
    assert abs(area - np.pi * 1.1**2) < 2e-3


def test_ball_coverage_is_binary_away_from_the_boundary():
    g = box_grid([-2.0], [2.0], 128)
    cov = ball_coverage(g, np.array([0.0]), 1.0)
    x = g.axis_centers(0)
    assert np.all(cov[np.abs(x) < 0.9] == 1.0)
    assert np.all(cov[np.abs(x) > 1.1] == 0.0)


def test_halfspace_coverage_volume_1d():
    g = box_grid([-2.0], [2.0], 256)
    cov = halfspace_coverage(g, np.array([1.0]), 0.37)
    assert abs(grid_mass(g, cov) - (2.0 - 0.37)) < 1e-4


def test_halfspace_coverage_oblique_2d():
    g = box_grid([-1.0, -1.0], [1.0, 1.0], 128)
    n = np.array([1.0, 1.0]) / np.sqrt(2.0)
    cov = halfspace_coverage(g, n, 0.0)
    # The diagonal half of the square has half its area.
    assert abs(grid_mass(g, cov) - 2.0) < 2e-3


def test_box_coverage_partial_cells():
    g = box_grid([0.0], [1.0], 10)
    cov = box_coverage(g, [0.25], [0.65])
    assert abs(grid_mass(g, cov) - 0.4) < 0.04


def test_tail_mass_full_line():
    # Tail of (1+x^2)^(-1) beyond [-20, 20]: pi - 2 arctan(20).
    g = box_grid([-20.0], [20.0], 256)
    tail = ExtremizerSpec(alpha=1.0, beta=1.0, center=np.array([0.0]), power=1.0)
    expect = np.pi - 2.0 * np.arctan(20.0)
    assert abs(tail_mass_1d(tail, g) - expect) < 1e-10


def test_tail_mass_within_window():
    g = box_grid([-20.0], [20.0], 256)
    tail = ExtremizerSpec(alpha=1.0, beta=1.0, center=np.array([0.0]), power=1.0)
    # Window covering one side only: arctan(30) - arctan(20).
    expect = np.arctan(30.0) - np.arctan(20.0)
    assert abs(tail_mass_1d(tail, g, within=(-5.0, 30.0)) - expect) < 1e-10
    # Window inside the box has no tail contribution.
    assert tail_mass_1d(tail, g, within=(-5.0, 5.0)) == 0.0
