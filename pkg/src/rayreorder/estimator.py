"""Termination-point estimation for the Two Point key.

Three estimators: a fixed fraction of the scene extent, an adaptive spatial
hash of observed ray lengths, and the real hit point obtained by tracing.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .geom import Aabb, as_batch, scene_extent

TABLE_BITS = 20
TABLE_CELLS = 1 << TABLE_BITS
DEFAULT_RATIO = 0.25
N_SHARDS = 16
_SNAPSHOT_MAGIC = b"LHT1"


@dataclass(frozen=True)
class EstimatorConfig:
    scene_extent: float
    fixed_ratio: float = DEFAULT_RATIO

    def __post_init__(self):
        if not 0.0 < self.fixed_ratio <= 1.0:
            raise ValueError(f"fixed_ratio must be in (0, 1], got {self.fixed_ratio}")
        if not self.scene_extent > 0.0:
            raise ValueError("scene_extent must be positive")

    @classmethod
    def for_aabb(cls, aabb: Aabb, fixed_ratio: float = DEFAULT_RATIO) -> "EstimatorConfig":
        return cls(scene_extent(aabb), fixed_ratio)

    @property
    def fixed_length(self) -> float:
        return self.fixed_ratio * self.scene_extent


class LengthHashTable:
    """Per-cell running sum of ray lengths and ray counts.

    Every cell starts with one dummy ray so that queries never divide by zero.
    """

    def __init__(self, sum_length: np.ndarray, count: np.ndarray):
        if sum_length.shape != count.shape:
            raise ValueError("sum and count arrays differ in shape")
        if np.any(count < 1):
            raise ValueError("every cell needs count >= 1")
        self.sum_length = sum_length
        self.count = count

    def __len__(self) -> int:
        return len(self.count)

    def lengths(self, cells) -> np.ndarray:
        return self.sum_length[cells] / self.count[cells]

    def copy(self) -> "LengthHashTable":
        return LengthHashTable(self.sum_length.copy(), self.count.copy())

    def save(self, path) -> None:
        """Binary snapshot: magic, u32 cell count, then (f32 sum, u32 count) per cell."""
        rec = np.empty(len(self), dtype=[("sum", "<f4"), ("count", "<u4")])
        rec["sum"] = self.sum_length
        rec["count"] = self.count
        with open(path, "wb") as fh:
            fh.write(_SNAPSHOT_MAGIC + struct.pack("<I", len(self)))
            fh.write(rec.tobytes())

    @classmethod
    def load(cls, path) -> "LengthHashTable":
        data = Path(path).read_bytes()
        if data[:4] != _SNAPSHOT_MAGIC:
            raise ValueError("not a length hash table snapshot")
        (n,) = struct.unpack("<I", data[4:8])
        rec = np.frombuffer(data, dtype=[("sum", "<f4"), ("count", "<u4")], count=n, offset=8)
        return cls(rec["sum"].astype(np.float64), rec["count"].astype(np.uint64))


def table_init(cfg: EstimatorConfig, cells: int = TABLE_CELLS) -> LengthHashTable:
    """Fresh table: each cell holds one dummy ray of length 0.25 * extent."""
    dummy = DEFAULT_RATIO * cfg.scene_extent
    return LengthHashTable(np.full(cells, dummy, dtype=np.float64), np.ones(cells, dtype=np.uint64))


def _advance(rays, lengths) -> np.ndarray:
    b = as_batch(rays)
    return b.origins + b.directions * np.asarray(lengths, dtype=np.float64).reshape(-1, 1)


def estimate_fixed(rays, cfg: EstimatorConfig) -> np.ndarray:
    """origin + direction * (fixed_ratio * scene_extent), shape (n, 3)."""
    b = as_batch(rays)
    return _advance(b, np.full(len(b), cfg.fixed_length))


def cell_index(rays, ctx) -> np.ndarray:
    """Hash cell: top 20 bits of the 32-bit Aila Compact key."""
    from .keys import KeyMethod, encode_layout

    b = as_batch(rays)
    keys = encode_layout(KeyMethod.AILA_COMPACT, b.origins, b.directions, key_bits=32,
                         aabb=ctx.scene_aabb)
    return (keys >> np.uint32(32 - TABLE_BITS)).astype(np.int64)


def estimate_adaptive(table: LengthHashTable, rays, ctx) -> np.ndarray:
    """origin + direction * mean cached length of the ray's cell."""
    b = as_batch(rays)
    return _advance(b, table.lengths(cell_index(b, ctx)))


def table_accumulate(table: LengthHashTable, rays, hit_distances, ctx) -> None:
    """Add observed lengths; non-finite distances (misses) are skipped.

    The batch is split into a fixed number of contiguous shards whose partial
    sums are merged in shard order, so results do not depend on thread count.
    """
    b = as_batch(rays)
    dist = np.asarray(hit_distances, dtype=np.float64).reshape(-1)
    if len(dist) != len(b):
        raise ValueError(f"{len(b)} rays but {len(dist)} distances")
    ok = np.isfinite(dist)
    if not ok.any():
        return
    cells = cell_index(b.take(np.flatnonzero(ok)), ctx)
    dist = dist[ok]
    for part_cells, part_dist in zip(np.array_split(cells, N_SHARDS), np.array_split(dist, N_SHARDS)):
        if len(part_cells):
            uniq, inv = np.unique(part_cells, return_inverse=True)
            table.sum_length[uniq] += np.bincount(inv, weights=part_dist, minlength=len(uniq))
            table.count[uniq] += np.bincount(inv, minlength=len(uniq)).astype(np.uint64)


def terminate_real(rays, bvh) -> np.ndarray:
    """Traced termination points: hit point, or where the ray leaves the scene box
    (or reaches its finite tmax first)."""
    from .tracer import trace_batch

    b = as_batch(rays)
    result, _ = trace_batch(bvh, b, "closest", instrument=False)
    exit_t = np.minimum(box_exit_distance(b, bvh.aabb), b.tmax)
    return _advance(b, np.where(result.hit, result.t, exit_t))


def box_exit_distance(rays, aabb: Aabb) -> np.ndarray:
    """Distance along each ray to the far side of ``aabb`` (0 if it never is inside)."""
    b = as_batch(rays)
    d = b.directions
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = 1.0 / d
        ta = (aabb.min - b.origins) * inv
        tb = (aabb.max - b.origins) * inv
    far = np.where(d != 0.0, np.maximum(ta, tb), np.inf)
    t = far.min(axis=1)
    return np.maximum(t, 0.0)
