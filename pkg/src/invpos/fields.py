"""Grid-sampled functions on R^N and the lifted conformal operators.

Grids are uniform and cell-centered: sample i sits at lo + (i + 1/2) h, so
default configurations never place a sample exactly on a sphere or plane of
inversion.  A Field may carry an analytic tail (the extremizer family), used
when a conformal map sends sample points outside the grid's bounding box.
"""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .geometry import Ball, HalfSpace, cayley_point, cayley_singular_point, invert_point, reflect_point


@dataclass(frozen=True)
class KernelParams:
    """Dimension N, kernel power lambda, and the diagonal exponent p."""

    dim: int
    lam: float

    def __post_init__(self):
        if self.dim not in (1, 2, 3):
            raise ValueError("dim must be 1, 2 or 3")
        if not (0.0 < self.lam < self.dim):
            raise ValueError(f"lambda must lie in (0, {self.dim})")

    @property
    def p(self) -> float:
        return 2.0 * self.dim / (2.0 * self.dim - self.lam)

    @property
    def positivity_valid(self) -> bool:
        """True if the positivity theorem applies (N <= 2, or lambda >= N - 2)."""
        return self.dim <= 2 or self.lam >= self.dim - 2

    @property
    def lift_power(self) -> float:
        """Exponent 2N - lambda of the conformal weight on functions."""
        return 2.0 * self.dim - self.lam


@dataclass(frozen=True, eq=False)
class Grid:
    """Uniform cell-centered grid: lo + (i + 1/2) h per axis."""

    lo: np.ndarray
    spacing: float
    shape: tuple

    def __eq__(self, other):
        return (
            isinstance(other, Grid)
            and self.shape == other.shape
            and self.spacing == other.spacing
            and np.array_equal(self.lo, other.lo)
        )

    def __hash__(self):
        return hash((self.shape, self.spacing, self.lo.tobytes()))

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lo, dtype=float))
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "shape", tuple(int(n) for n in self.shape))
        if self.spacing <= 0 or not np.isfinite(self.spacing):
            raise ValueError("grid spacing must be positive")
        if len(self.shape) != lo.shape[0] or any(n < 1 for n in self.shape):
            raise ValueError("grid shape must match dim and be positive")

    @property
    def dim(self) -> int:
        return len(self.shape)

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    @property
    def hi(self) -> np.ndarray:
        return self.lo + self.spacing * np.asarray(self.shape)

    def axis_centers(self, axis: int) -> np.ndarray:
        n = self.shape[axis]
        return self.lo[axis] + self.spacing * (np.arange(n) + 0.5)

    def points(self) -> np.ndarray:
        """All cell centers, shape (size, dim), row-major order."""
        axes = [self.axis_centers(k) for k in range(self.dim)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    def cell_volume(self) -> float:
        return self.spacing**self.dim


def centered_grid(dim: int, halfwidth: float, points_per_axis: int) -> Grid:
    """Grid covering [-halfwidth, halfwidth]^dim."""
    h = 2.0 * halfwidth / points_per_axis
    return Grid(lo=np.full(dim, -halfwidth), spacing=h, shape=(points_per_axis,) * dim)


def box_grid(lo, hi, points_per_axis) -> Grid:
    lo = np.atleast_1d(np.asarray(lo, dtype=float))
    hi = np.atleast_1d(np.asarray(hi, dtype=float))
    shape = tuple(np.broadcast_to(points_per_axis, lo.shape).astype(int))
    widths = (hi - lo) / np.asarray(shape)
    if not np.allclose(widths, widths[0], rtol=1e-12, atol=0.0):
        raise ValueError("box must give a uniform spacing on all axes")
    return Grid(lo=lo, spacing=float(widths[0]), shape=shape)


@dataclass(frozen=True)
class ExtremizerSpec:
    """Parameters of alpha (beta + |x - center|^2)^(-power)."""

    alpha: float
    beta: float
    center: np.ndarray
    power: float

    def __post_init__(self):
        if self.beta <= 0:
            raise ValueError("beta must be positive")
        object.__setattr__(self, "center", np.atleast_1d(np.asarray(self.center, dtype=float)))

    def __call__(self, pts) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        d2 = np.sum((pts - self.center) ** 2, axis=-1)
        return self.alpha * (self.beta + d2) ** (-self.power)


@dataclass(frozen=True)
class Field:
    """Values sampled at the cell centers of a grid, plus an optional tail."""

    grid: Grid
    values: np.ndarray
    tail: Optional[ExtremizerSpec] = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float).reshape(self.grid.shape)
        if not np.all(np.isfinite(v)):
            raise ValueError("field values must be finite")
        object.__setattr__(self, "values", v)

    @property
    def dim(self) -> int:
        return self.grid.dim

    def with_values(self, values, keep_tail: bool = False) -> "Field":
        return Field(self.grid, values, tail=self.tail if keep_tail else None)


def make_extremizer(spec: ExtremizerSpec, kp: KernelParams, grid: Grid) -> Field:
    """Sample the HLS extremizer family member on the grid.

    The exponent is (2N - lambda)/2 unless ``spec.power`` already says
    otherwise (the Li-Zhu densities use power N).
    """
    if not (np.all(spec.center >= grid.lo) and np.all(spec.center <= grid.hi)):
        raise ValueError("grid bounding box must cover the extremizer center")
    vals = spec(grid.points()).reshape(grid.shape)
    return Field(grid, vals, tail=spec)


def extremizer_spec(kp: KernelParams, alpha: float = 1.0, beta: float = 1.0, center=None) -> ExtremizerSpec:
    if center is None:
        center = np.zeros(kp.dim)
    return ExtremizerSpec(alpha=alpha, beta=beta, center=center, power=kp.lift_power / 2.0)


def lp_norm(f: Field, p: float) -> float:
    """Midpoint-rule L^p norm, (sum |f_i|^p h^N)^(1/p)."""
    if p < 1:
        raise ValueError("p must be >= 1")
    return float(np.sum(np.abs(f.values) ** p) ** (1.0 / p) * f.grid.cell_volume() ** (1.0 / p))


def eval_field(f: Field, pts) -> np.ndarray:
    """Multilinear interpolation of ``f`` at arbitrary points.

    Outside the grid bounding box the analytic tail is used if present,
    otherwise 0.
    """
    pts = np.asarray(pts, dtype=float)
    squeeze = pts.ndim == 1
    pts = np.atleast_2d(pts)
    g = f.grid
    h = g.spacing
    # Fractional index of the containing cell, relative to cell centers.
    t = (pts - (g.lo + 0.5 * h)) / h
    inside = np.all((pts >= g.lo) & (pts <= g.hi), axis=-1)
    out = np.zeros(pts.shape[0])
    if f.tail is not None and not np.all(inside):
        out[~inside] = f.tail(pts[~inside])
    if np.any(inside):
        ti = t[inside]
        i0 = np.clip(np.floor(ti).astype(int), 0, np.asarray(g.shape) - 1)
        i1 = np.minimum(i0 + 1, np.asarray(g.shape) - 1)
        w = np.clip(ti - i0, 0.0, 1.0)
        acc = np.zeros(ti.shape[0])
        for corner in itertools.product((0, 1), repeat=g.dim):
            idx = tuple(np.where(c, i1[:, k], i0[:, k]) for k, c in enumerate(corner))
            weight = np.prod(np.stack([w[:, k] if c else 1.0 - w[:, k] for k, c in enumerate(corner)], axis=0), axis=0)
            acc += weight * f.values[idx]
        out[inside] = acc
    return out[0] if squeeze else out


def _conformal_pullback(f: Field, kp: KernelParams, mapped_pts, weight, mask=None) -> Field:
    vals = weight * eval_field(f, mapped_pts)
    if mask is not None:
        vals = np.where(mask, 0.0, vals)
    return Field(f.grid, vals.reshape(f.grid.shape))


def apply_inversion(b: Ball, f: Field, kp: KernelParams) -> Field:
    """Lifted inversion (r/|x-a|)^(2N-lambda) f(Theta_B(x)) on f's grid.

    Samples inside the cell containing the center are masked to 0; their
    quadrature contribution vanishes under refinement since 2N - lambda < 2N.
    """
    pts = f.grid.points()
    d = np.linalg.norm(pts - b.center, axis=-1)
    mask = d < 0.5 * f.grid.spacing
    d_safe = np.where(mask, b.radius, d)
    safe_pts = np.where(mask[:, None], pts + 2.0 * b.radius, pts)
    mapped = invert_point(b, safe_pts)
    weight = (b.radius / d_safe) ** kp.lift_power
    return _conformal_pullback(f, kp, mapped, weight, mask)


def apply_reflection(h: HalfSpace, f: Field) -> Field:
    """Lifted reflection f(Theta_H(x)) on f's grid."""
    mapped = reflect_point(h, f.grid.points())
    return Field(f.grid, eval_field(f, mapped).reshape(f.grid.shape))


def apply_cayley(f: Field, kp: KernelParams) -> Field:
    """Lifted Cayley-type map (sqrt(2)/|x-e|)^(2N-lambda) f(B(x))."""
    pts = f.grid.points()
    e = cayley_singular_point(f.dim)
    d = np.linalg.norm(pts - e, axis=-1)
    mask = d < 0.5 * f.grid.spacing
    safe_pts = np.where(mask[:, None], pts + 2.0, pts)
    mapped = cayley_point(safe_pts)
    d_safe = np.where(mask, 1.0, d)
    weight = (np.sqrt(2.0) / d_safe) ** kp.lift_power
    return _conformal_pullback(f, kp, mapped, weight, mask)


def region_mask(region, grid: Grid) -> np.ndarray:
    """Boolean mask of cell centers lying in the region, shape = grid.shape."""
    return region.contains(grid.points()).reshape(grid.shape)


def apply_region_map(region, f: Field, kp: KernelParams) -> Field:
    if isinstance(region, Ball):
        return apply_inversion(region, f, kp)
    if isinstance(region, HalfSpace):
        return apply_reflection(region, f)
    raise TypeError(f"unsupported region type {type(region)!r}")


def split_in_out(region, f: Field, kp: KernelParams) -> tuple:
    """Inside/outside splices f^i, f^o of f with its conformal image.

    f^i keeps f inside the region and the lifted image outside; f^o is the
    complement.  A warning is emitted if the region does not bisect the
    |f|^p mass, in which case the splices no longer preserve the p-norm.
    """
    theta_f = apply_region_map(region, f, kp)
    inside = region_mask(region, f.grid)
    fi = Field(f.grid, np.where(inside, f.values, theta_f.values))
    fo = Field(f.grid, np.where(inside, theta_f.values, f.values))
    mass = np.abs(f.values) ** kp.p
    total = mass.sum()
    if total > 0:
        imbalance = abs(mass[inside].sum() / total - 0.5)
        if imbalance > 1e-3:
            warnings.warn(
                f"region misses the |f|^p mass median by {imbalance:.2e} of total; "
                "splices will not preserve the p-norm",
                stacklevel=2,
            )
    return fi, fo


def coarsen(f: Field, factor: int = 2) -> Field:
    """Block-average onto a grid with ``factor`` times the spacing."""
    g = f.grid
    new_shape = tuple(n // factor for n in g.shape)
    if any(n < 2 for n in new_shape):
        raise ValueError("grid too small to coarsen")
    trimmed = f.values[tuple(slice(0, n * factor) for n in new_shape)]
    v = trimmed
    for axis in range(g.dim):
        v = v.reshape(v.shape[:axis] + (new_shape[axis], factor) + v.shape[axis + 1 :]).mean(axis=axis + 1)
    return Field(Grid(g.lo, g.spacing * factor, new_shape), v, tail=f.tail)


# --- CSV serialization (CLI interchange format) ---


def write_field_csv(f: Field, path) -> None:
    g = f.grid
    with open(path, "w") as fh:
        fh.write(f"dim,{g.dim}\n")
        fh.write("origin," + ",".join(format(float(x), ".17g") for x in g.lo) + "\n")
        fh.write(f"spacing,{format(float(g.spacing), '.17g')}\n")
        fh.write("extent," + ",".join(str(int(n)) for n in g.shape) + "\n")
        if f.tail is not None:
            t = f.tail
            nums = [t.alpha, t.beta, t.power] + list(t.center)
            fh.write("tail," + ",".join(format(float(v), ".17g") for v in nums) + "\n")
        for v in f.values.ravel():
            fh.write(f"{format(float(v), '.17g')}\n")


def read_field_csv(path) -> Field:
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    n_header = 5 if len(lines) > 4 and lines[4].startswith("tail,") else 4
    header = {}
    for ln in lines[:n_header]:
        key, _, rest = ln.partition(",")
        header[key] = rest
    try:
        dim = int(header["dim"])
        lo = np.array([float(x) for x in header["origin"].split(",")])
        spacing = float(header["spacing"])
        shape = tuple(int(x) for x in header["extent"].split(","))
        tail = None
        if "tail" in header:
            nums = [float(x) for x in header["tail"].split(",")]
            if len(nums) != 3 + dim:
                raise ValueError("tail header needs alpha, beta, power and a center")
            tail = ExtremizerSpec(alpha=nums[0], beta=nums[1], power=nums[2], center=np.array(nums[3:]))
    except (KeyError, ValueError) as exc:
        raise ValueError(f"malformed field CSV header in {path}") from exc
    if len(lo) != dim or len(shape) != dim:
        raise ValueError("field CSV header is inconsistent")
    values = np.array([float(ln) for ln in lines[n_header:]])
    return Field(Grid(lo, spacing, shape), values, tail=tail)
