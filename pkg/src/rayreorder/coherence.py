"""Capsule-based ray coherence measure and the correlation helpers around it.

A capsule is fitted to a ray subset: its axis runs through the centroid of
the origins and the centroid of the termination points, and each end radius
is the mean distance of the respective points from that axis.  Smaller
surface area means a more coherent subset.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

SUBSET_SIZE = 64
COINCIDENT_REL = 1e-9


@dataclass(frozen=True)
class Capsule:
    c_o: np.ndarray
    c_t: np.ndarray
    r_o: float
    r_t: float
    sphere_radius: float | None = None  # set when the centroids coincide

    @property
    def height(self) -> float:
        return float(np.linalg.norm(self.c_t - self.c_o))


@dataclass
class CoherenceReport:
    areas: np.ndarray
    mean: float
    n: int = SUBSET_SIZE

    @property
    def subsets(self) -> int:
        return len(self.areas)


def _line_distances(points, a, axis_unit):
    rel = points - a
    along = np.sum(rel * axis_unit, axis=-1)
    return np.linalg.norm(rel - along[..., None] * axis_unit, axis=-1)


def capsule_fit(origins, terminations, extent: float | None = None) -> Capsule:
    """Fit a capsule to paired origin/termination points.

    ``extent`` sets the scale for the coincident-centroid test; it defaults
    to the largest side of the points' bounding box.
    """
    o = np.asarray(origins, dtype=np.float64).reshape(-1, 3)
    t = np.asarray(terminations, dtype=np.float64).reshape(-1, 3)
    if len(o) == 0:
        raise ValueError("capsule_fit needs at least one ray")
    if len(o) != len(t):
        raise ValueError("origins and terminations differ in count")
    c_o = o.mean(axis=0)
    c_t = t.mean(axis=0)
    axis = c_t - c_o
    h = float(np.linalg.norm(axis))
    if extent is None:
        pts = np.vstack([o, t])
        extent = float(np.max(pts.max(axis=0) - pts.min(axis=0)))
    if h <= COINCIDENT_REL * extent:
        pts = np.vstack([o, t])
        c = pts.mean(axis=0)
        r = float(np.linalg.norm(pts - c, axis=1).mean())
        return Capsule(c_o, c_t, 0.0, 0.0, sphere_radius=r)
    u = axis / h
    return Capsule(c_o, c_t, float(_line_distances(o, c_o, u).mean()), float(_line_distances(t, c_o, u).mean()))


def capsule_area(c: Capsule) -> float:
    """Two hemispherical caps plus the lateral surface of the frustum between them."""
    if c.sphere_radius is not None:
        return 4.0 * np.pi * c.sphere_radius**2
    h = c.height
    slant = np.hypot(h, c.r_t - c.r_o)
    return float(2 * np.pi * c.r_o**2 + 2 * np.pi * c.r_t**2 + np.pi * (c.r_o + c.r_t) * slant)


def subset_areas(origins, terminations, n: int = SUBSET_SIZE, extent: float | None = None) -> np.ndarray:
    """Capsule area of every complete run of ``n`` consecutive rays (vectorized)."""
    o = np.asarray(origins, dtype=np.float64).reshape(-1, 3)
    t = np.asarray(terminations, dtype=np.float64).reshape(-1, 3)
    k = len(o) // n
    o = o[: k * n].reshape(k, n, 3)
    t = t[: k * n].reshape(k, n, 3)
    c_o = o.mean(axis=1)
    c_t = t.mean(axis=1)
    axis = c_t - c_o
    h = np.linalg.norm(axis, axis=1)
    if extent is None:
        both = np.concatenate([o, t], axis=1)
        extent = np.max(both.max(axis=1) - both.min(axis=1), axis=1)
    sphere = h <= COINCIDENT_REL * np.asarray(extent)
    u = axis / np.where(h > 0, h, 1.0)[:, None]
    r_o = _line_distances(o, c_o[:, None, :], u[:, None, :]).mean(axis=1)
    r_t = _line_distances(t, c_o[:, None, :], u[:, None, :]).mean(axis=1)
    slant = np.hypot(h, r_t - r_o)
    area = 2 * np.pi * r_o**2 + 2 * np.pi * r_t**2 + np.pi * (r_o + r_t) * slant
    if sphere.any():
        both = np.concatenate([o[sphere], t[sphere]], axis=1)
        r = np.linalg.norm(both - both.mean(axis=1, keepdims=True), axis=2).mean(axis=1)
        area[sphere] = 4 * np.pi * r**2
    return area


def mean_measure(origins, terminations, n: int = SUBSET_SIZE, extent: float | None = None) -> CoherenceReport:
    """Mean capsule area over consecutive ``n``-ray subsets in the current order.

    A trailing partial subset is ignored.
    """
    o = np.asarray(origins).reshape(-1, 3)
    if len(o) < n:
        raise ValueError(f"need at least {n} rays, got {len(o)}")
    areas = subset_areas(o, terminations, n, extent)
    return CoherenceReport(areas, float(areas.mean()), n)


def capsule_dump(path, origins, terminations, n: int = SUBSET_SIZE, extent: float | None = None) -> None:
    """CSV of fitted capsules: subset id, centroids, radii, area."""
    o = np.asarray(origins).reshape(-1, 3)
    t = np.asarray(terminations).reshape(-1, 3)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["subset", "co_x", "co_y", "co_z", "ct_x", "ct_y", "ct_z", "r_o", "r_t", "area"])
        for s in range(len(o) // n):
            c = capsule_fit(o[s * n : (s + 1) * n], t[s * n : (s + 1) * n], extent)
            w.writerow([s, *map(repr, c.c_o.tolist()), *map(repr, c.c_t.tolist()), repr(c.r_o), repr(c.r_t),
                        repr(capsule_area(c))])


def pearson(xs, ys) -> float:
    """Sample Pearson correlation coefficient."""
    x = np.asarray(xs, dtype=np.float64)
    y = np.asarray(ys, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("pearson needs two 1-D series of equal length")
    if len(x) < 2:
        raise ValueError("pearson needs at least two points")
    if np.ptp(x) == 0.0 or np.ptp(y) == 0.0:
        raise ValueError("zero variance: correlation undefined")
    dx = x - x.mean()
    dy = y - y.mean()
    sx = np.sqrt(np.dot(dx, dx))
    sy = np.sqrt(np.dot(dy, dy))
    if sx == 0.0 or sy == 0.0:
        raise ValueError("zero variance: correlation undefined")
    return float(np.clip(np.dot(dx, dy) / (sx * sy), -1.0, 1.0))


def relative_series(method_values, unsorted_values) -> np.ndarray:
    m = np.asarray(method_values, dtype=np.float64)
    u = np.asarray(unsorted_values, dtype=np.float64)
    if m.shape != u.shape:
        raise ValueError("series differ in shape")
    if np.any(u == 0):
        raise ZeroDivisionError("unsorted reference contains zeros")
    return m / u
