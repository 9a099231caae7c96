"""Point algebra and the semi-regular ring gridding of a sphere."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

Vec3 = np.ndarray
"""A float64 array of shape (3,), all components finite."""


def as_vec3(v) -> Vec3:
    """Validate and copy ``v`` as a finite 3-vector."""
    arr = np.array(v, dtype=np.float64)
    if arr.shape != (3,):
        raise ValueError(f"expected a 3-vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"vector components must be finite, got {arr}")
    return arr


def kelvin_map(x) -> Vec3:
    """Inversion in the unit sphere, ``x / |x|**2``.

    Pairs an exterior source with its interior interpolation point and vice
    versa.  The map is an involution and fixes the unit sphere pointwise.
    """
    x = as_vec3(x)
    r2 = float(x @ x)
    if r2 == 0.0:
        raise ValueError("kelvin_map is undefined at the origin; use a constant basis instead")
    return x / r2


def mirror_map(x) -> Vec3:
    """Reflection through the plane z = 0."""
    x = as_vec3(x)
    return np.array([x[0], x[1], -x[2]])


def angular_separation(a, b) -> float:
    """Angle in radians between the directions of ``a`` and ``b``."""
    a = as_vec3(a)
    b = as_vec3(b)
    na = math.sqrt(float(a @ a))
    nb = math.sqrt(float(b @ b))
    if na == 0.0 or nb == 0.0:
        raise ValueError("angular separation is undefined for the zero vector")
    c = float(a @ b) / (na * nb)
    return math.acos(min(1.0, max(-1.0, c)))


@dataclass(frozen=True)
class SeparationStats:
    min_sep: float
    max_min_sep: float

    @property
    def min_sep_deg(self) -> float:
        return math.degrees(self.min_sep)

    @property
    def max_min_sep_deg(self) -> float:
        return math.degrees(self.max_min_sep)


@dataclass(frozen=True, eq=False)
class PointConfig:
    """Ring-gridded points on a sphere of ``radius`` (rows of ``points``)."""

    radius: float
    points: np.ndarray
    n_theta: int

    def __post_init__(self):
        pts = np.array(self.points, dtype=np.float64)
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return len(self.points)

    def scaled(self, radius: float) -> "PointConfig":
        return PointConfig(radius, self.points * (radius / self.radius), self.n_theta)


def _ring_count(theta: float, dtheta: float) -> int:
    # largest N whose neighbouring points on the ring keep separation >= dtheta
    a = np.array([math.sin(theta), 0.0, math.cos(theta)])
    n = 1
    while True:
        trial = n + 1
        phi = 2.0 * math.pi / trial
        b = np.array([math.sin(theta) * math.cos(phi), math.sin(theta) * math.sin(phi), math.cos(theta)])
        if angular_separation(a, b) < dtheta:
            return n
        n = trial


def ring_grid(n_theta: int, radius: float = 1.0) -> PointConfig:
    """Semi-regular grid: poles plus latitude rings at spacing pi/(n_theta-1).

    Each interior ring holds as many equally spaced points as possible while
    adjacent points stay at least the ring spacing apart.  Ordering is north
    pole, rings by increasing colatitude with azimuth increasing from 0, and
    the south pole last.  ``n_theta = 2`` gives only the two poles.
    """
    if int(n_theta) != n_theta or n_theta < 2:
        raise ValueError(f"n_theta must be an integer >= 2, got {n_theta!r}")
    if not radius > 0:
        raise ValueError(f"radius must be positive, got {radius!r}")
    n_theta = int(n_theta)
    dtheta = math.pi / (n_theta - 1)
    pts = [(0.0, 0.0, 1.0)]
    for n in range(2, n_theta):
        theta = (n - 1) * dtheta
        n_phi = _ring_count(theta, dtheta)
        st, ct = math.sin(theta), math.cos(theta)
        for m in range(n_phi):
            phi = m * 2.0 * math.pi / n_phi
            pts.append((st * math.cos(phi), st * math.sin(phi), ct))
    pts.append((0.0, 0.0, -1.0))
    return PointConfig(float(radius), radius * np.array(pts), n_theta)


def _separation_matrix(points: np.ndarray) -> np.ndarray:
    u = points / np.linalg.norm(points, axis=1)[:, None]
    return np.arccos(np.clip(u @ u.T, -1.0, 1.0))


def separation_stats(config: PointConfig | np.ndarray) -> SeparationStats:
    """Minimum pairwise angle and the largest nearest-neighbour angle."""
    points = config.points if isinstance(config, PointConfig) else np.asarray(config, dtype=np.float64)
    if len(points) < 2:
        raise ValueError("separation statistics need at least two points")
    if np.any(np.linalg.norm(points, axis=1) == 0.0):
        raise ValueError("angular separation is undefined for the zero vector")
    beta = _separation_matrix(points)
    np.fill_diagonal(beta, np.inf)
    nearest = beta.min(axis=1)
    return SeparationStats(float(nearest.min()), float(nearest.max()))


def union(*configs: PointConfig) -> np.ndarray:
    """Stack several grids into one point array (e.g. a multi-shell basis)."""
    return np.vstack([c.points for c in configs])
