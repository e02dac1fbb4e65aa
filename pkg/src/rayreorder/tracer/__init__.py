"""Instrumented CPU trace kernel.

The warp-divergence and cache models stand in for a GPU profiler: they only
make directional claims (sorted vs. unsorted), never absolute ones.
"""
from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from ..geom import Ray, RayBatch, as_batch
from . import kernels
from .bvh import Bvh, build_bvh, triangle_areas
from .kernels import DET_EPS, T_MIN
from .sim import (
    DEFAULT_CACHE,
    CacheConfig,
    cache_simulate,
    lockstep_trace,
    simulate_warps,
    warp_efficiency,
    warp_efficiency_parts,
)

__all__ = [
    "Bvh", "build_bvh", "triangle_areas", "HitRecord", "TraceResult", "TraceStats",
    "closest_hit", "any_hit", "trace_batch", "warp_efficiency", "cache_simulate",
    "CacheConfig", "DEFAULT_CACHE", "T_MIN", "DET_EPS", "lockstep_trace",
]


@dataclass(frozen=True)
class HitRecord:
    hit: bool
    t: float
    triangle: int


@dataclass(frozen=True)
class Counters:
    node_visits: int
    triangle_tests: int


@dataclass
class TraceResult:
    hit: np.ndarray
    t: np.ndarray  # inf for misses
    triangle: np.ndarray  # original triangle index, -1 for misses

    def points(self, rays: RayBatch) -> np.ndarray:
        return rays.origins + rays.directions * np.where(self.hit, self.t, 0.0)[:, None]


@dataclass
class TraceStats:
    node_visits: np.ndarray
    triangle_tests: np.ndarray
    warp_efficiency: float
    cache_hit_rate: float
    wall_time_ms: float
    warp_size: int = 64
    eff_num: float = 0.0
    eff_den: float = 0.0
    cache_hits: int = 0
    cache_accesses: int = 0
    lockstep_steps: int = 0
    sim_cycles: float = 0.0


def _single(bvh: Bvh, ray: Ray, any_mode: bool):
    b = as_batch(ray)
    t, slot, visits, tests = kernels.run(bvh, b.origins, b.directions, b.tmax, any_mode)
    hit = slot[0] >= 0
    rec = HitRecord(bool(hit), float(t[0]), int(bvh.tri_ids[slot[0]]) if hit else -1)
    return rec, Counters(int(visits[0]), int(tests[0]))


def closest_hit(bvh: Bvh, ray: Ray) -> tuple[HitRecord, Counters]:
    """Nearest intersection with t in (T_MIN, tmax]."""
    return _single(bvh, ray, False)


def any_hit(bvh: Bvh, ray: Ray) -> tuple[bool, Counters]:
    rec, counters = _single(bvh, ray, True)
    return rec.hit, counters


def trace_batch(bvh: Bvh, rays, mode: str = "closest", warp_size: int = 64,
                cache: CacheConfig = DEFAULT_CACHE, instrument: bool = True):
    """Trace ``rays`` in their current order and measure the grouping metrics.

    The first pass is the timed trace.  With ``instrument`` a second pass
    records each ray's node visits so warps can be replayed through the
    cache model.
    """
    if mode not in ("closest", "any"):
        raise ValueError(f"mode must be 'closest' or 'any', got {mode!r}")
    if warp_size not in (32, 64):
        raise ValueError("warp_size must be 32 or 64")
    b = as_batch(rays)
    any_mode = mode == "any"
    t0 = time.perf_counter()
    t, slot, visits, tests = kernels.run(bvh, b.origins, b.directions, b.tmax, any_mode)
    wall = (time.perf_counter() - t0) * 1e3
    hit = slot >= 0
    result = TraceResult(hit, np.where(hit, t, np.inf), np.where(hit, bvh.tri_ids[np.maximum(slot, 0)], -1))
    stats = TraceStats(visits, tests, 1.0, 1.0, wall, warp_size)
    if len(b) == 0:
        return result, stats
    num, den = warp_efficiency_parts(visits, warp_size)
    stats.eff_num, stats.eff_den = num, den
    stats.warp_efficiency = num / den if den else 1.0
    if instrument:
        rec_off = np.zeros(len(b), np.int64)
        np.cumsum(visits[:-1], out=rec_off[1:])
        rec = np.empty(int(visits.sum()), np.int32)
        kernels.run(bvh, b.origins, b.directions, b.tmax, any_mode, rec, rec_off)
        hits, accesses, max_steps = simulate_warps(rec, rec_off, visits, warp_size, cache)
        stats.cache_hits = int(hits.sum())
        stats.cache_accesses = int(accesses.sum())
        stats.cache_hit_rate = stats.cache_hits / stats.cache_accesses if stats.cache_accesses else 1.0
        stats.lockstep_steps = int(max_steps.sum())
        stats.sim_cycles = float(max_steps.sum() + cache.miss_cycles * (accesses - hits).sum())
    return result, stats
