"""Hemi-balls of measures and the characterization of inversion-invariant ones.

A Measure is a weighted point cloud or a non-negative grid density.  The
module constructs hemi-balls on rays, solves for balls mapping one axis
point to another, and runs the five numerical checks whose joint success is
the signature of the invariant family alpha (beta + |x - y|^2)^(-N).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import List, Optional

import numpy as np
from scipy.optimize import least_squares

from .coverage import SUBSAMPLE, ball_coverage, grid_mass, halfspace_coverage, tail_mass_1d
from .fields import Ball, ExtremizerSpec, Field, HalfSpace, KernelParams, eval_field
from .geometry import invert_point, reflect_point
from .symmetrize import BracketingError


@dataclass(frozen=True)
class Box:
    """Axis-aligned Borel box query primitive."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "lo", np.atleast_1d(np.asarray(self.lo, dtype=float)))
        object.__setattr__(self, "hi", np.atleast_1d(np.asarray(self.hi, dtype=float)))

    def contains(self, pts) -> np.ndarray:
        pts = np.atleast_2d(pts)
        return np.all((pts >= self.lo) & (pts <= self.hi), axis=-1)


@dataclass(frozen=True)
class Measure:
    """Finite non-negative measure: point cloud or grid density (not both)."""

    points: Optional[np.ndarray] = None
    weights: Optional[np.ndarray] = None
    density: Optional[Field] = None

    def __post_init__(self):
        if (self.density is None) == (self.points is None):
            raise ValueError("measure needs either a point cloud or a density")
        if self.points is not None:
            pts = np.atleast_2d(np.asarray(self.points, dtype=float))
            w = np.asarray(self.weights, dtype=float)
            if len(w) != len(pts) or np.any(w < 0):
                raise ValueError("weights must be non-negative, one per point")
            object.__setattr__(self, "points", pts)
            object.__setattr__(self, "weights", w)
        else:
            if np.any(self.density.values < 0):
                raise ValueError("density must be non-negative")
        if not self.total_mass > 0:
            raise ValueError("measure must have positive total mass")

    @property
    def dim(self) -> int:
        return self.points.shape[1] if self.points is not None else self.density.dim

    @property
    def total_mass(self) -> float:
        if self.points is not None:
            return float(self.weights.sum())
        total = grid_mass(self.density.grid, self.density.values)
        if self.density.tail is not None and self.density.dim == 1:
            total += tail_mass_1d(self.density.tail, self.density.grid)
        return total

    def mass_in_ball(self, ball: Ball) -> float:
        if self.points is not None:
            d = np.linalg.norm(self.points - ball.center, axis=-1)
            inside = d < ball.radius - 1e-12 * ball.radius
            on_sphere = np.abs(d - ball.radius) <= 1e-12 * ball.radius
            # Boundary atoms split evenly between ball and complement.
            return float(self.weights[inside].sum() + 0.5 * self.weights[on_sphere].sum())
        f = self.density
        m = grid_mass(f.grid, f.values, ball_coverage(f.grid, ball.center, ball.radius))
        if f.tail is not None and f.dim == 1:
            m += tail_mass_1d(f.tail, f.grid, within=(ball.center[0] - ball.radius, ball.center[0] + ball.radius))
        return m

    def mass_in_halfspace(self, hs: HalfSpace) -> float:
        if self.points is not None:
            s = self.points @ hs.normal - hs.offset
            return float(self.weights[s > 1e-12].sum() + 0.5 * self.weights[np.abs(s) <= 1e-12].sum())
        f = self.density
        m = grid_mass(f.grid, f.values, halfspace_coverage(f.grid, hs.normal, hs.offset))
        if f.tail is not None and f.dim == 1:
            if hs.normal[0] > 0:
                m += tail_mass_1d(f.tail, f.grid, within=(hs.offset, np.inf))
            else:
                m += tail_mass_1d(f.tail, f.grid, within=(-np.inf, -hs.offset))
        return m


def pushforward_mass(m: Measure, region, target) -> float:
    """mu(Theta^-1(target)) for Theta the inversion/reflection of the region.

    Point clouds are mapped directly (atoms at an inversion center are
    rejected); densities are integrated over the preimage with a 3^N
    subsample on every cell.
    """
    if isinstance(region, Ball):
        themap = lambda pts: invert_point(region, pts)
        if m.points is not None:
            d = np.linalg.norm(m.points - region.center, axis=-1)
            if np.any((d < 1e-14 * region.radius) & (m.weights > 0)):
                raise ValueError("cloud carries mass at the inversion center")
    elif isinstance(region, HalfSpace):
        themap = lambda pts: reflect_point(region, pts)
    else:
        raise TypeError("region must be a Ball or HalfSpace")
    if m.points is not None:
        mapped = themap(m.points)
        return float(m.weights[target.contains(mapped)].sum())
    f = m.density
    g = f.grid
    pts = g.points()
    steps = (np.arange(SUBSAMPLE) - (SUBSAMPLE - 1) / 2.0) * (g.spacing / SUBSAMPLE)
    offs = np.asarray(list(itertools.product(steps, repeat=g.dim)))
    acc = np.zeros(len(pts))
    for off in offs:
        mapped = themap(pts + off)
        acc += target.contains(mapped)
    frac = acc / len(offs)
    return float(np.sum(f.values.ravel() * frac)) * g.cell_volume()


@dataclass(frozen=True)
class HemiBallResult:
    center: np.ndarray
    radius: float
    mass_imbalance: float


def _half_mass_ball_on_ray(m: Measure, e: np.ndarray, u: float) -> HemiBallResult:
    """Bisection over rho on the monotone map rho -> mu(B_rho((u - rho) e))."""
    total = m.total_mass
    half = 0.5 * total

    def mass(rho: float) -> float:
        return m.mass_in_ball(Ball(center=(u - rho) * e, radius=rho))

    lo, hi = 1e-12, max(u, 1.0)
    tries = 0
    while mass(hi) < half:
        hi *= 2.0
        tries += 1
        if tries > 60:
            raise BracketingError("could not bracket the half-mass radius")
    rho = hi
    for _ in range(120):
        mid = 0.5 * (lo + hi)
        v = mass(mid)
        if abs(v - half) < 1e-9 * total:
            rho = mid
            break
        if v < half:
            lo = mid
        else:
            hi = mid
        rho = 0.5 * (lo + hi)
    imb = mass(rho) - half
    return HemiBallResult(center=(u - rho) * e, radius=rho, mass_imbalance=imb)


def hemiball_on_ray(m: Measure, e, u: float) -> HemiBallResult:
    """Hemi-ball through u e with center on the e-axis.

    Requires the measure to balance the plane {x . e = 0} (the symmetrized
    setting in which the center stays on the axis).
    """
    e = np.atleast_1d(np.asarray(e, dtype=float))
    e = e / np.linalg.norm(e)
    if u <= 0:
        raise ValueError("u must be positive")
    total = m.total_mass
    above = m.mass_in_halfspace(HalfSpace(normal=e, offset=0.0))
    if abs(above - 0.5 * total) > 1e-6 * total + 1e-4 * total:
        raise ValueError("measure must bisect the plane through the origin normal to e")
    res = _half_mass_ball_on_ray(m, e, u)
    if abs(res.mass_imbalance) > 1e-6 * total:
        raise BracketingError("half-mass bisection did not converge")
    return res


def solve_mapping_ball(m: Measure, e, s: float, t: float) -> HemiBallResult:
    """Hemi-ball B with center on the e-axis and Theta_B(s e) = t e.

    Root of f(u) = |t e - a_u| |s e - a_u| - rho_u^2 over u in (s, t], found
    by bisection on a sign change of the sampled table.
    """
    e = np.atleast_1d(np.asarray(e, dtype=float))
    e = e / np.linalg.norm(e)
    if not (0 <= s < t):
        raise ValueError("need 0 <= s < t")

    def fval(u: float) -> float:
        res = _half_mass_ball_on_ray(m, e, u)
        a = (u - res.radius)
        return abs(t - a) * abs(s - a) - res.radius**2

    u_lo = s if s > 0 else 1e-3 * t
    us = np.linspace(u_lo, t, 33)
    vals = [fval(u) for u in us]
    bracket = None
    for (u1, v1), (u2, v2) in zip(zip(us[:-1], vals[:-1]), zip(us[1:], vals[1:])):
        if v1 > 0 >= v2 or v1 >= 0 > v2:
            bracket = (u1, u2)
            break
    if bracket is None:
        table = "\n".join(f"  u={u:.6g}  f(u)={v:.6g}" for u, v in zip(us, vals))
        raise BracketingError(f"no sign change of f(u) found on [{u_lo:.6g}, {t:.6g}]:\n{table}")
    lo, hi = bracket
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        v = fval(mid)
        if abs(v) < 1e-12 * max(1.0, t * t) or hi - lo < 1e-13 * max(1.0, t):
            break
        if v > 0:
            lo = mid
        else:
            hi = mid
    return _half_mass_ball_on_ray(m, e, 0.5 * (lo + hi))


def check_pointwise_invariance(v: Field, b: Ball) -> float:
    """Max relative deviation of v from its inversion image with weight 2N.

    Samples with both endpoints of the inversion inside the grid box are
    compared; near 0 exactly when the density is invariant under the ball.
    """
    if np.any(v.values < 0):
        raise ValueError("density must be non-negative")
    g = v.grid
    pts = g.points()
    d = np.linalg.norm(pts - b.center, axis=-1)
    ok = d > g.spacing
    mapped = np.full_like(pts, np.nan)
    mapped[ok] = invert_point(b, pts[ok])
    in_box = ok & np.all((mapped >= g.lo) & (mapped <= g.hi), axis=-1)
    vx = v.values.ravel()[in_box]
    weight = (b.radius / d[in_box]) ** (2 * g.dim)
    vmapped = eval_field(v, mapped[in_box])
    floor = 1e-12 * float(v.values.max())
    dev = np.abs(vx - weight * vmapped) / np.maximum(vx, floor)
    return float(dev.max())


def check_mass_identity(v: Field, centers) -> float:
    """Coefficient of variation of r_a^(2N) v(a) over the given centers.

    r_a is the radius of the hemi-ball of the density centered at a (found
    by radius bisection); near 0 for the invariant family.
    """
    m = Measure(density=v)
    total = m.total_mass
    vals = []
    for a in centers:
        a = np.atleast_1d(np.asarray(a, dtype=float))

        def mass(r: float) -> float:
            return m.mass_in_ball(Ball(center=a, radius=r))

        lo, hi = 1e-12, 1.0
        while mass(hi) < 0.5 * total:
            hi *= 2.0
            if hi > 1e9:
                raise BracketingError("hemi-ball radius bracketing failed")
        for _ in range(100):
            mid = 0.5 * (lo + hi)
            mm = mass(mid)
            if abs(mm - 0.5 * total) < 1e-9 * total:
                break
            if mm < 0.5 * total:
                lo = mid
            else:
                hi = mid
        r_a = mid
        va = float(eval_field(v, a))
        vals.append(r_a ** (2 * v.dim) * va)
    vals = np.asarray(vals)
    if len(vals) < 2:
        return 0.0
    return float(np.std(vals) / np.mean(vals))


def check_radial_derivative(v: Field, x) -> tuple:
    """(finite-difference radial derivative, -N v(x) / rho) at x.

    rho is the radius of the hemi-ball through x with center on the ray; the
    two sides agree for the invariant family (Step-5 geometry).
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    r = float(np.linalg.norm(x))
    if r == 0:
        raise ValueError("x must be away from the origin")
    e = x / r
    g = v.grid
    h = g.spacing
    x_plus = (r + h) * e
    x_minus = (r - h) * e
    if np.any(x_plus > g.hi) or np.any(x_minus < g.lo) or np.any(x_plus < g.lo) or np.any(x_minus > g.hi):
        raise ValueError("finite-difference stencil leaves the grid")
    lhs = float((eval_field(v, x_plus) - eval_field(v, x_minus)) / (2.0 * h))
    m = Measure(density=v)
    ball = hemiball_on_ray(m, e, r)
    rho = ball.radius
    rhs = float(-v.dim * eval_field(v, x) / rho)
    return lhs, rhs


@dataclass(frozen=True)
class InvariantDensityFit:
    alpha: float
    beta: float
    center: np.ndarray
    fit_error: float
    mass_divergence: bool


def fit_invariant_density(v: Field) -> InvariantDensityFit:
    """Least-squares fit of alpha (beta + |x - y|^2)^(-N) to a density.

    fit_error is the relative L1 residual; mass_divergence flags densities
    whose mass concentrates in a near-singular cell (non-integrable spike),
    for which the finite-measure hypothesis fails.
    """
    if np.any(v.values < 0):
        raise ValueError("density must be non-negative")
    g = v.grid
    n = g.dim
    pts = g.points()
    vals = v.values.ravel()
    total = vals.sum() * g.cell_volume()
    if total <= 0:
        raise ValueError("density must have positive mass")
    peak_frac = float(vals.max()) * g.cell_volume() / total
    diverges = peak_frac > 0.05
    center0 = (vals @ pts) / vals.sum()
    m = Measure(density=v)

    def mass(r: float) -> float:
        return m.mass_in_ball(Ball(center=center0, radius=r))

    lo, hi = 1e-12, 1.0
    while mass(hi) < 0.5 * total and hi < 1e9:
        hi *= 2.0
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if mass(mid) < 0.5 * total:
            lo = mid
        else:
            hi = mid
    beta0 = max(0.5 * (lo + hi), 1e-6) ** 2
    alpha0 = max(float(vals.max()), 1e-300) * beta0**n
    scale = float(vals.max())

    def resid(params):
        la, lb = params[0], params[1]
        c = params[2:]
        d2 = np.sum((pts - c) ** 2, axis=-1)
        return (np.exp(la) * (np.exp(lb) + d2) ** (-n) - vals) / scale

    x0 = np.concatenate([[np.log(alpha0), np.log(beta0)], center0])
    sol = least_squares(resid, x0, method="lm", max_nfev=500)
    alpha = float(np.exp(sol.x[0]))
    beta = float(np.exp(sol.x[1]))
    center = sol.x[2:]
    if not np.isfinite(alpha) or not np.isfinite(beta):
        raise RuntimeError("degenerate invariant-density fit")
    d2 = np.sum((pts - center) ** 2, axis=-1)
    model = alpha * (beta + d2) ** (-n)
    err = float(np.sum(np.abs(model - vals)) / np.sum(np.abs(vals)))
    return InvariantDensityFit(alpha=alpha, beta=beta, center=center, fit_error=err, mass_divergence=diverges)


@dataclass(frozen=True)
class RadialDecreasingReport:
    max_radial_violation: float
    max_monotonicity_violation: float


def check_radial_decreasing(m: Measure, n_samples: int = 12, seed: int = 0) -> RadialDecreasingReport:
    """Sampled radiality and ray-monotonicity checks on ball masses.

    Radiality compares congruent balls at equal center distance from the
    origin; monotonicity compares balls along a ray separated by the
    t - r > t' + r condition.  Violations are reported relative to the total
    mass.
    """
    rng = np.random.default_rng(seed)
    total = m.total_mass
    dim = m.dim
    rad_viol = 0.0
    mono_viol = 0.0
    for _ in range(n_samples):
        dist = rng.uniform(0.3, 2.0)
        r = rng.uniform(0.1, 0.5) * dist
        e1 = rng.normal(size=dim)
        e1 /= np.linalg.norm(e1)
        e2 = rng.normal(size=dim)
        e2 /= np.linalg.norm(e2)
        m1 = m.mass_in_ball(Ball(center=dist * e1, radius=r))
        m2 = m.mass_in_ball(Ball(center=dist * e2, radius=r))
        rad_viol = max(rad_viol, abs(m1 - m2) / total)
        # Monotone pair along e1: outer ball should carry no more mass.
        t_in = rng.uniform(0.2, 1.0)
        rr = rng.uniform(0.05, 0.3)
        t_out = t_in + 2.0 * rr + rng.uniform(0.2, 1.5)
        m_in = m.mass_in_ball(Ball(center=t_in * e1, radius=rr))
        m_out = m.mass_in_ball(Ball(center=t_out * e1, radius=rr))
        mono_viol = max(mono_viol, (m_out - m_in) / total)
    return RadialDecreasingReport(max_radial_violation=rad_viol, max_monotonicity_violation=max(mono_viol, 0.0))
