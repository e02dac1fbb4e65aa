"""Geometric primitives shared by the key methods.

Rays are handled as struct-of-arrays batches (:class:`RayBatch`); a single
:class:`Ray` converts to a batch of one with :func:`as_batch`.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

MAX_QUANT_BITS = 32
BOX_EPSILON = 1e-4
_ONE_MINUS_ULP = np.nextafter(1.0, 0.0)


class RayKind(enum.IntEnum):
    SECONDARY = 0
    SHADOW = 1
    PRIMARY = 2


@dataclass(frozen=True)
class Aabb:
    min: np.ndarray
    max: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.min, dtype=np.float64).reshape(3)
        hi = np.asarray(self.max, dtype=np.float64).reshape(3)
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise ValueError("Aabb corners must be finite")
        if np.any(lo > hi):
            raise ValueError(f"invalid Aabb: min {lo} > max {hi}")
        object.__setattr__(self, "min", lo)
        object.__setattr__(self, "max", hi)

    @classmethod
    def from_points(cls, points) -> "Aabb":
        pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
        if len(pts) == 0:
            raise ValueError("cannot bound an empty point set")
        return cls(pts.min(axis=0), pts.max(axis=0))

    @property
    def extent(self) -> np.ndarray:
        return self.max - self.min

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (self.min + self.max)

    def expanded(self, rel: float = BOX_EPSILON) -> "Aabb":
        """Grow every side by ``rel`` times the largest extent."""
        pad = rel * scene_extent(self)
        return Aabb(self.min - pad, self.max + pad)

    def clamp(self, points: np.ndarray) -> np.ndarray:
        return np.clip(points, self.min, self.max)


@dataclass(frozen=True)
class Ray:
    origin: np.ndarray
    direction: np.ndarray
    tmax: float = np.inf
    kind: RayKind = RayKind.SECONDARY


@dataclass
class RayBatch:
    """A dense batch of rays.

    ``pixel`` and ``sample`` carry provenance for scattering results back to
    the framebuffer; they are optional for batches read from disk.
    """

    origins: np.ndarray
    directions: np.ndarray
    tmax: np.ndarray
    kind: np.ndarray
    pixel: np.ndarray | None = None
    sample: np.ndarray | None = None
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        self.origins = np.ascontiguousarray(self.origins, dtype=np.float64).reshape(-1, 3)
        self.directions = np.ascontiguousarray(self.directions, dtype=np.float64).reshape(-1, 3)
        n = len(self.origins)
        if len(self.directions) != n:
            raise ValueError("origins and directions differ in length")
        self.tmax = np.broadcast_to(np.asarray(self.tmax, dtype=np.float64), (n,)).copy()
        self.kind = np.broadcast_to(np.asarray(self.kind, dtype=np.uint8), (n,)).copy()

    def __len__(self) -> int:
        return len(self.origins)

    def take(self, indices) -> "RayBatch":
        idx = np.asarray(indices)
        return RayBatch(
            self.origins[idx],
            self.directions[idx],
            self.tmax[idx],
            self.kind[idx],
            None if self.pixel is None else self.pixel[idx],
            None if self.sample is None else self.sample[idx],
            {k: v[idx] for k, v in self.extra.items()},
        )

    def validate(self, atol: float = 1e-6) -> None:
        norms = np.linalg.norm(self.directions, axis=1)
        if np.any(np.abs(norms - 1.0) > atol):
            raise ValueError("ray directions must be unit length")
        if np.any(~(self.tmax > 0)):
            raise ValueError("ray tmax must be positive")
        if not np.all(np.isfinite(self.origins)):
            raise ValueError("ray origins must be finite")


def as_batch(rays) -> RayBatch:
    if isinstance(rays, RayBatch):
        return rays
    if isinstance(rays, Ray):
        return RayBatch(rays.origin, rays.direction, rays.tmax, int(rays.kind))
    raise TypeError(f"expected Ray or RayBatch, got {type(rays).__name__}")


def scene_extent(aabb: Aabb) -> float:
    """Largest side length of ``aabb``."""
    ext = float(np.max(aabb.max - aabb.min))
    if ext <= 0.0:
        raise ValueError("degenerate bounding box has zero extent")
    return ext


def normalize_point(p, aabb: Aabb) -> np.ndarray:
    """Map points into [0, 1)^3 relative to ``aabb``; outside points clamp.

    Flat axes (zero width) map to 0.
    """
    p = np.asarray(p, dtype=np.float64)
    width = aabb.max - aabb.min
    safe = np.where(width > 0, width, 1.0)
    u = (p - aabb.min) / safe
    u = np.where(width > 0, u, 0.0)
    return np.clip(u, 0.0, _ONE_MINUS_ULP)


def quantize(u, bits: int):
    """floor(u * 2**bits) clamped to [0, 2**bits - 1], as uint64."""
    if not isinstance(bits, (int, np.integer)) or not 1 <= bits <= MAX_QUANT_BITS:
        raise ValueError(f"bits must be an integer in [1, {MAX_QUANT_BITS}], got {bits!r}")
    scale = float(1 << int(bits))
    q = np.floor(np.asarray(u, dtype=np.float64) * scale)
    q = np.clip(q, 0.0, scale - 1.0).astype(np.uint64)
    return q if q.ndim else int(q)
