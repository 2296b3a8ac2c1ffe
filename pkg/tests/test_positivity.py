"""Inversion positivity: defects, the representation oracle, boundary examples."""

import numpy as np
import pytest

from invpos.energy import energy_direct, gaussian_field
from invpos.fields import Field, KernelParams, box_grid
from invpos.geometry import Ball, HalfSpace
from invpos.positivity import (
    SearchFailureError,
    find_negative_defect,
    halfspace_representation,
    kernel_k,
    newton_zero_overlap,
    positivity_defect,
    reflected_energy,
)


def _halfline_field(n=512, hi=16.0, center=2.0, width=0.7):
    g = box_grid([0.0], [hi], n)
    x = g.axis_centers(0)
    return Field(g, np.exp(-((x - center) ** 2) / (2.0 * width**2)))


def test_defect_nonnegative_for_halfspace():
    kp = KernelParams(dim=1, lam=0.5)
    g = box_grid([-16.0], [16.0], 512)
    f = gaussian_field(g, [1.0], 1.0)
    h = HalfSpace(normal=np.array([1.0]), offset=0.0)
    rep = positivity_defect(h, f, kp)
    assert rep.defect >= -rep.est_error
    assert not rep.strict_flag


def test_defect_vanishes_for_symmetric_field():
    kp = KernelParams(dim=1, lam=0.5)
    g = box_grid([-16.0], [16.0], 512)
    f = gaussian_field(g, [0.0], 1.0)
    h = HalfSpace(normal=np.array([1.0]), offset=0.0)
    rep = positivity_defect(h, f, kp)
    assert rep.strict_flag
    assert abs(rep.defect) <= 3.0 * rep.est_error


def test_defect_and_g_form_agree():
    # The defect equals I[g, Theta g] for g = (f - Theta f) restricted to one
    # side; the two independent computations must agree.
    kp = KernelParams(dim=1, lam=0.5)
    g = box_grid([-16.0], [16.0], 512)
    f = gaussian_field(g, [1.5], 0.8)
    h = HalfSpace(normal=np.array([1.0]), offset=0.0)
    rep = positivity_defect(h, f, kp)
    assert abs(rep.defect - rep.defect_via_g) <= 3.0 * rep.est_error


def test_defect_oracle_consistency_1d_halfspace():
    kp = KernelParams(dim=1, lam=0.5)
    g = box_grid([-16.0], [16.0], 512)
    f = gaussian_field(g, [2.0], 0.7)
    h = HalfSpace(normal=np.array([1.0]), offset=0.0)
    rep = positivity_defect(h, f, kp)
    assert rep.oracle_value is not None
    assert abs(rep.defect_via_g - rep.oracle_value) <= 5.0 * rep.est_error + 1e-3 * abs(rep.oracle_value)


def test_defect_nonnegative_for_ball_region_2d():
    kp = KernelParams(dim=2, lam=1.0)
    g = box_grid([-8.0, -8.0], [8.0, 8.0], 128)
    f = gaussian_field(g, [2.0, 0.5], 0.8)
    b = Ball(center=np.array([-3.0, 0.0]), radius=1.5)
    rep = positivity_defect(b, f, kp)
    assert rep.defect >= -rep.est_error


def test_kernel_k_residue_closed_form():
    # lambda = N - 2 (N=3): k(xi, t) = pi e^(-t xi) / xi; at xi=1, t=2 this
    # is (pi) e^(-2) ... the J-form normalization gives pi/xi * exp(-t xi).
    kp = KernelParams(dim=3, lam=1.0)
    assert np.isclose(kernel_k(kp, 1.0, 2.0), np.pi * np.exp(-2.0), rtol=1e-12)
    assert np.isclose(kernel_k(kp, 2.0, 1.0), 0.5 * np.pi * np.exp(-2.0), rtol=1e-12)


def test_kernel_k_rejects_lambda_below_threshold():
    kp = KernelParams(dim=3, lam=0.5)
    with pytest.raises(ValueError):
        kernel_k(kp, 1.0, 1.0)


def test_kernel_k_positive_above_threshold():
    kp = KernelParams(dim=3, lam=1.5)
    for xi in (0.5, 1.0, 2.0):
        for t in (0.3, 1.0, 3.0):
            assert kernel_k(kp, xi, t) > 0.0


def test_representation_closed_form_indicator():
    # f = chi_[0,1], lambda = 1/2: I[Theta_H f, f] = (2 sqrt(2) - 2)/0.75.
    kp = KernelParams(dim=1, lam=0.5)
    g = box_grid([0.0], [16.0], 1024)
    x = g.axis_centers(0)
    f = Field(g, np.where(x <= 1.0, 1.0, 0.0))
    value = halfspace_representation(f, kp)
    expect = (2.0 ** 1.5 - 2.0) / 0.75
    assert abs(value - expect) < 0.005 * expect


def test_representation_matches_direct_1d():
    kp = KernelParams(dim=1, lam=0.75)
    f = _halfline_field()
    value = halfspace_representation(f, kp)
    direct = reflected_energy(f, f, kp)
    assert abs(value - direct.value) <= 3.0 * direct.est_error + 2e-3 * abs(value)


def test_representation_is_nonnegative_for_signed_fields():
    # The representation is a weighted square, hence non-negative even when
    # f changes sign.
    kp = KernelParams(dim=1, lam=0.5)
    g = box_grid([0.0], [16.0], 512)
    x = g.axis_centers(0)
    f = Field(g, np.sin(x) * np.exp(-((x - 3.0) ** 2)))
    assert halfspace_representation(f, kp) >= 0.0


def test_representation_matches_direct_2d_radial():
    kp = KernelParams(dim=2, lam=1.5)
    g = box_grid([-6.0, 0.0], [6.0, 12.0], 64)
    pts = g.points().reshape(64, 64, 2)
    vals = np.exp(-(pts[..., 0] ** 2) / 2.0) * np.exp(-((pts[..., 1] - 2.0) ** 2) / 2.0)
    f = Field(g, vals)
    value = halfspace_representation(f, kp)
    direct = reflected_energy(f, f, kp)
    assert abs(value - direct.value) <= 3.0 * direct.est_error + 5e-3 * abs(value)


def test_representation_rejects_nonradial_2d():
    kp = KernelParams(dim=2, lam=1.5)
    g = box_grid([-6.0, 0.0], [6.0, 12.0], 64)
    pts = g.points().reshape(64, 64, 2)
    vals = np.exp(-((pts[..., 0] - 0.5) ** 2) / 2.0) * np.exp(-((pts[..., 1] - 2.0) ** 2) / 2.0)
    with pytest.raises(ValueError):
        halfspace_representation(Field(g, vals), kp)


def test_newton_zero_overlap():
    kp = KernelParams(dim=3, lam=1.0)
    res = newton_zero_overlap(kp)
    assert abs(res.overlap) <= res.est_error
    assert res.self_energy > 100.0 * res.est_error


def test_newton_example_rejects_wrong_parameters():
    with pytest.raises(ValueError):
        newton_zero_overlap(KernelParams(dim=3, lam=1.5))


def test_find_negative_defect_below_threshold():
    kp = KernelParams(dim=3, lam=0.5)
    wit = find_negative_defect(kp)
    assert wit.negative_defect < -3.0 * wit.est_error
    assert wit.positive_defect > 3.0 * wit.est_error


def test_find_negative_defect_fails_at_the_boundary():
    # At lambda = N - 2 the form is positive semi-definite: the search must
    # come back empty-handed rather than fabricate a witness.
    kp = KernelParams(dim=3, lam=1.0)
    with pytest.raises(SearchFailureError):
        find_negative_defect(kp)
