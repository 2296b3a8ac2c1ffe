"""Grids, sampled fields, conformal pullbacks, and the field CSV format."""

import numpy as np
import pytest

from invpos.fields import (
    ExtremizerSpec,
    Field,
    KernelParams,
    apply_inversion,
    apply_reflection,
    apply_region_map,
    box_grid,
    coarsen,
    eval_field,
    extremizer_spec,
    lp_norm,
    make_extremizer,
    read_field_csv,
    write_field_csv,
)
from invpos.geometry import Ball, HalfSpace


def test_kernel_params_validation_and_exponent():
    kp = KernelParams(dim=1, lam=0.5)
    assert np.isclose(kp.p, 2.0 * 1 / (2.0 * 1 - 0.5))
    with pytest.raises(ValueError):
        KernelParams(dim=3, lam=3.5)
    with pytest.raises(ValueError):
        KernelParams(dim=2, lam=0.0)


def test_positivity_validity_threshold():
    assert KernelParams(dim=1, lam=0.25).positivity_valid
    assert KernelParams(dim=3, lam=1.0).positivity_valid
    assert not KernelParams(dim=3, lam=0.5).positivity_valid


def test_extremizer_lp_norm_matches_closed_form_on_the_box():
    # N=1, lambda=1/2: p = 4/3 and |f|^p = (1+x^2)^(-1), whose integral over
    # [-20, 20] is 2 arctan 20.  lp_norm is deliberately box-only; analytic
    # tails are accounted for separately by the mass bisection routines.
    kp = KernelParams(dim=1, lam=0.5)
    g = box_grid([-20.0], [20.0], 2048)
    f = make_extremizer(extremizer_spec(kp), kp, g)
    norm = lp_norm(f, kp.p)
    assert abs(norm - (2.0 * np.arctan(20.0)) ** (1.0 / kp.p)) < 1e-4


def test_eval_field_uses_tail_outside_the_box():
    kp = KernelParams(dim=1, lam=0.5)
    g = box_grid([-4.0], [4.0], 256)
    f = make_extremizer(extremizer_spec(kp), kp, g)
    far = np.array([[25.0]])
    assert np.isclose(float(eval_field(f, far)[0]), (1.0 + 625.0) ** (-0.75), rtol=1e-12)


def test_eval_field_interpolates_inside():
    g = box_grid([-2.0], [2.0], 512)
    x = g.axis_centers(0)
    f = Field(g, x**2)
    assert abs(float(eval_field(f, np.array([[0.7]]))[0]) - 0.49) < 1e-4


def test_reflection_pullback_moves_support():
    kp = KernelParams(dim=1, lam=0.5)
    g = box_grid([-8.0], [8.0], 512)
    x = g.axis_centers(0)
    f = Field(g, np.exp(-((x - 2.0) ** 2)))
    h = HalfSpace(normal=np.array([1.0]), offset=0.0)
    rf = apply_reflection(h, f)
    i_orig = np.argmax(f.values)
    i_refl = np.argmax(rf.values)
    assert np.isclose(x[i_refl], -x[i_orig], atol=g.spacing)


def test_inversion_pullback_is_an_involution_on_compact_support():
    kp = KernelParams(dim=1, lam=0.5)
    g = box_grid([-8.0], [8.0], 2048)
    x = g.axis_centers(0)
    f = Field(g, np.exp(-((x - 2.0) ** 2) / 0.25))
    # A large, nearby ball keeps the inverted image well resolved; the
    # residual is pure interpolation error of the intermediate resampling.
    b = Ball(center=np.array([-2.0]), radius=2.0)
    back = apply_inversion(b, apply_inversion(b, f, kp), kp)
    sel = f.values > 1e-8
    assert np.max(np.abs(back.values[sel] - f.values[sel])) < 1e-2


def test_inversion_pullback_preserves_p_norm():
    # The Jacobian-power weight is exactly the one making the p-norm invariant.
    kp = KernelParams(dim=1, lam=0.5)
    g = box_grid([-8.0], [8.0], 2048)
    x = g.axis_centers(0)
    f = Field(g, np.exp(-((x - 2.0) ** 2) / 0.25))
    b = Ball(center=np.array([-3.0]), radius=1.0)
    tf = apply_inversion(b, f, kp)
    assert abs(lp_norm(tf, kp.p) - lp_norm(f, kp.p)) < 2e-3 * lp_norm(f, kp.p)


def test_apply_region_map_dispatches():
    kp = KernelParams(dim=1, lam=0.5)
    g = box_grid([-4.0], [4.0], 128)
    x = g.axis_centers(0)
    f = Field(g, np.exp(-(x**2)))
    h = HalfSpace(normal=np.array([1.0]), offset=0.0)
    assert np.allclose(apply_region_map(h, f, kp).values, apply_reflection(h, f).values)


def test_coarsen_preserves_cell_averages():
    g = box_grid([0.0], [4.0], 8)
    f = Field(g, np.arange(8, dtype=float))
    c = coarsen(f)
    assert c.grid.shape == (4,)
    assert np.allclose(c.values, [0.5, 2.5, 4.5, 6.5])


def test_field_csv_round_trip_with_tail(tmp_path):
    g = box_grid([-3.0, -3.0], [3.0, 3.0], 16)
    rng = np.random.default_rng(0)
    tail = ExtremizerSpec(alpha=1.3, beta=0.7, center=np.array([0.1, -0.2]), power=2.0)
    f = Field(g, rng.uniform(size=(16, 16)), tail=tail)
    path = tmp_path / "field.csv"
    write_field_csv(f, path)
    f2 = read_field_csv(path)
    assert f2.grid == g
    assert np.array_equal(f2.values, f.values)
    assert f2.tail is not None
    assert (f2.tail.alpha, f2.tail.beta, f2.tail.power) == (1.3, 0.7, 2.0)
    assert np.array_equal(f2.tail.center, tail.center)


def test_field_csv_round_trip_without_tail(tmp_path):
    g = box_grid([-1.0], [1.0], 32)
    f = Field(g, np.linspace(0.0, 1.0, 32))
    path = tmp_path / "field.csv"
    write_field_csv(f, path)
    f2 = read_field_csv(path)
    assert f2.tail is None
    assert np.array_equal(f2.values, f.values)


def test_field_csv_rejects_malformed_header(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("dim,1\norigin,zero\nspacing,0.1\nextent,4\n1\n2\n3\n4\n")
    with pytest.raises(ValueError):
        read_field_csv(path)
