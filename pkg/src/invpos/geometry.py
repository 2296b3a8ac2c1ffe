"""Balls, half-spaces and the three conformal point maps.

Points are plain numpy arrays of length N (N = 1, 2 or 3).  All maps are
involutions and act on single points or on stacked arrays of shape (..., N).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

MAX_DIM = 3

# Relative distance below which a point counts as the inversion center.
CENTER_CUTOFF = 1e-14


def _as_points(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        x = x[None]
    if not (1 <= x.shape[-1] <= MAX_DIM):
        raise ValueError(f"points must have 1 to {MAX_DIM} coordinates, got {x.shape[-1]}")
    if not np.all(np.isfinite(x)):
        raise ValueError("points must have finite coordinates")
    return x


@dataclass(frozen=True)
class Ball:
    """Open ball |x - center| < radius."""

    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", _as_points(self.center).reshape(-1))
        if not (self.radius > 0 and np.isfinite(self.radius)):
            raise ValueError("ball radius must be positive and finite")

    @property
    def dim(self) -> int:
        return self.center.shape[0]

    def contains(self, x) -> np.ndarray:
        x = _as_points(x)
        return np.linalg.norm(x - self.center, axis=-1) < self.radius


@dataclass(frozen=True)
class HalfSpace:
    """Open half-space x . normal > offset, with unit interior normal."""

    normal: np.ndarray
    offset: float

    def __post_init__(self):
        n = _as_points(self.normal).reshape(-1)
        norm = np.linalg.norm(n)
        if abs(norm - 1.0) > 1e-12:
            raise ValueError(f"normal must be a unit vector, |n| = {norm}")
        object.__setattr__(self, "normal", n)
        object.__setattr__(self, "offset", float(self.offset))

    @property
    def dim(self) -> int:
        return self.normal.shape[0]

    def contains(self, x) -> np.ndarray:
        x = _as_points(x)
        return x @ self.normal > self.offset


def invert_point(b: Ball, x) -> np.ndarray:
    """Inversion through the sphere bounding ``b``.

    x |-> center + r^2 (x - center) / |x - center|^2.  Undefined at the
    center; points closer than CENTER_CUTOFF * r raise a ValueError.
    """
    x = _as_points(x)
    d = x - b.center
    dist2 = np.sum(d * d, axis=-1)
    if np.any(dist2 < (CENTER_CUTOFF * b.radius) ** 2):
        raise ValueError("inversion undefined at the ball center")
    return b.center + (b.radius**2 / dist2)[..., None] * d


def reflect_point(h: HalfSpace, x) -> np.ndarray:
    """Reflection through the boundary hyperplane of ``h``."""
    x = _as_points(x)
    return x + 2.0 * (h.offset - x @ h.normal)[..., None] * h.normal


def cayley_point(x) -> np.ndarray:
    """Involutive conformal map exchanging the unit ball and {x_N > 0}.

    x |-> (2 x' / |x - e|^2, (1 - |x|^2) / |x - e|^2) with e = (0,...,0,-1).
    For N = 1 this reduces to x |-> (1 - x) / (1 + x).  Undefined at e.
    """
    x = _as_points(x)
    n = x.shape[-1]
    e = np.zeros(n)
    e[-1] = -1.0
    d = x - e
    dist2 = np.sum(d * d, axis=-1)
    if np.any(dist2 < CENTER_CUTOFF**2):
        raise ValueError("cayley map undefined at (0,...,0,-1)")
    out = np.empty_like(x)
    if n > 1:
        out[..., :-1] = 2.0 * x[..., :-1] / dist2[..., None]
    out[..., -1] = (1.0 - np.sum(x * x, axis=-1)) / dist2
    return out


def cayley_singular_point(dim: int) -> np.ndarray:
    e = np.zeros(dim)
    e[-1] = -1.0
    return e
