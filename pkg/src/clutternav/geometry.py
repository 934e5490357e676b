"""Planar vector math, disc primitives, boundary sampling, and directed
Hausdorff distance.

Point sets are ``(n, 2)`` float arrays throughout; :class:`Point2` is the
scalar-pair value type used at API boundaries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class GeometryError(ValueError):
    """Raised on invalid geometric input (empty sets, bad radii, non-finite coordinates)."""


@dataclass(frozen=True)
class Point2:
    """A point in the plane, in meters."""

    x: float
    y: float

    def as_tuple(self):
        return (self.x, self.y)


@dataclass(frozen=True)
class Disc:
    """A disc with positive radius, in meters."""

    center: Point2
    radius: float

    def __post_init__(self):
        if not self.radius > 0.0:
            raise GeometryError(f"disc radius must be > 0, got {self.radius}")


def _check_finite(*vals):
    for v in vals:
        if not math.isfinite(v):
            raise GeometryError(f"non-finite coordinate: {v}")


def _xy(p):
    """Accept a Point2 or a bare (x, y) pair."""
    if isinstance(p, Point2):
        return p.x, p.y
    return float(p[0]), float(p[1])


def distance(p, q) -> float:
    """Euclidean distance between two points.

    The sqrt(dx^2 + dy^2) form is used verbatim so that scalar and
    vectorized callers round identically.
    """
    px, py = _xy(p)
    qx, qy = _xy(q)
    _check_finite(px, py, qx, qy)
    dx = px - qx
    dy = py - qy
    return math.sqrt(dx * dx + dy * dy)


def disc_clearance(p, d: Disc) -> float:
    """Signed clearance from a point to a disc boundary.

    Negative values are penetration depth.
    """
    return distance(p, d.center) - d.radius


def sample_boundary(d: Disc, n: int) -> np.ndarray:
    """n equally spaced boundary points, counter-clockwise from angle 0.

    Deterministic: identical arguments always yield the identical array.
    """
    if n < 3:
        raise GeometryError(f"boundary sampling needs n >= 3, got {n}")
    cx, cy = _xy(d.center)
    angles = 2.0 * math.pi * np.arange(n) / n
    pts = np.empty((n, 2))
    pts[:, 0] = cx + d.radius * np.cos(angles)
    pts[:, 1] = cy + d.radius * np.sin(angles)
    return pts


def as_point_array(points) -> np.ndarray:
    """Coerce a sequence of points (Point2 or pairs) to an (n, 2) array."""
    if isinstance(points, np.ndarray):
        arr = points.astype(float, copy=False)
        if arr.ndim != 2 or arr.shape[1] != 2:
            raise GeometryError(f"point array must have shape (n, 2), got {arr.shape}")
        return arr
    rows = [_xy(p) for p in points]
    if not rows:
        return np.empty((0, 2))
    return np.asarray(rows, dtype=float)


def directed_hausdorff(A, B) -> tuple[float, Point2]:
    """max_{a in A} min_{b in B} d(a, b), with the maximizing point of A.

    Ties are broken by the lowest index in A, so downstream anchor
    placement is deterministic.
    """
    A = as_point_array(A)
    B = as_point_array(B)
    if A.shape[0] == 0 or B.shape[0] == 0:
        raise GeometryError("directed_hausdorff requires nonempty point sets")
    if not (np.isfinite(A).all() and np.isfinite(B).all()):
        raise GeometryError("non-finite coordinates in point set")
    dx = A[:, 0][:, None] - B[:, 0][None, :]
    dy = A[:, 1][:, None] - B[:, 1][None, :]
    dist = np.sqrt(dx * dx + dy * dy)
    mins = dist.min(axis=1)
    i = int(np.argmax(mins))  # first occurrence on ties
    return float(mins[i]), Point2(float(A[i, 0]), float(A[i, 1]))
