"""Lockstep warp model and set-associative LRU cache model."""
from __future__ import annotations

from dataclasses import dataclass

import numba as nb
import numpy as np


@dataclass(frozen=True)
class CacheConfig:
    size_bytes: int = 32 * 1024
    line_bytes: int = 128
    ways: int = 4
    node_stride: int = 32  # bytes per BVH node
    miss_cycles: int = 8  # stall charged to a warp per miss in the cost model

    @property
    def n_sets(self) -> int:
        sets = self.size_bytes // (self.line_bytes * self.ways)
        if sets < 1:
            raise ValueError("cache smaller than one set")
        return sets


DEFAULT_CACHE = CacheConfig()


def warp_groups(steps: np.ndarray, warp_size: int):
    """Yield (sum, max, size) per consecutive group of ``warp_size`` rays."""
    steps = np.asarray(steps, dtype=np.float64)
    n = len(steps)
    full = n // warp_size
    sums = steps[: full * warp_size].reshape(full, warp_size).sum(axis=1)
    maxs = steps[: full * warp_size].reshape(full, warp_size).max(axis=1, initial=0.0)
    sizes = np.full(full, warp_size, dtype=np.float64)
    if n % warp_size:
        tail = steps[full * warp_size :]
        sums = np.append(sums, tail.sum())
        maxs = np.append(maxs, tail.max())
        sizes = np.append(sizes, len(tail))
    return sums, maxs, sizes


def warp_efficiency_parts(steps, warp_size: int) -> tuple[float, float]:
    """Numerator and weight of the visit-weighted efficiency mean."""
    sums, maxs, sizes = warp_groups(steps, warp_size)
    live = maxs > 0
    eff = sums[live] / (sizes[live] * maxs[live])
    return float(np.sum(sums[live] * eff)), float(np.sum(sums[live]))


def warp_efficiency(step_counts, warp_size: int) -> float:
    """Fraction of lockstep slots doing useful work.

    Per group of ``warp_size`` consecutive rays the efficiency is
    sum(steps) / (group size * max(steps)); the batch value weights groups
    by their step sums.  Groups without any step are skipped.

    >>> warp_efficiency([2, 4], 2)
    0.75
    """
    steps = np.asarray(step_counts)
    if steps.size == 0:
        raise ValueError("step counts must be non-empty")
    if warp_size < 1:
        raise ValueError("warp size must be positive")
    num, den = warp_efficiency_parts(steps, warp_size)
    if den == 0:
        raise ValueError("all groups have zero steps")
    return num / den


@nb.njit(cache=True)
def _lru_access(tags, stamps, set_idx, tag, clock):
    ways = tags.shape[1]
    victim = 0
    for w in range(ways):
        if tags[set_idx, w] == tag:
            stamps[set_idx, w] = clock
            return True
        if stamps[set_idx, w] < stamps[set_idx, victim]:
            victim = w
    tags[set_idx, victim] = tag
    stamps[set_idx, victim] = clock
    return False


@nb.njit(cache=True)
def _simulate_trace(trace, n_sets, ways, line_bytes, stride):
    tags = np.full((n_sets, ways), -1, np.int64)
    stamps = np.full((n_sets, ways), -1, np.int64)
    hits = 0
    for i in range(len(trace)):
        line = (trace[i] * stride) // line_bytes
        if _lru_access(tags, stamps, line % n_sets, line // n_sets, i):
            hits += 1
    return hits


@nb.njit(cache=True, parallel=True)
def _simulate_warps(rec, rec_off, lengths, warp_size, n_sets, ways, line_bytes, stride):
    n = len(lengths)
    n_warps = (n + warp_size - 1) // warp_size
    hits = np.zeros(n_warps, np.int64)
    accesses = np.zeros(n_warps, np.int64)
    max_steps = np.zeros(n_warps, np.int64)
    for w in nb.prange(n_warps):
        lo = w * warp_size
        hi = min(lo + warp_size, n)
        longest = 0
        for r in range(lo, hi):
            longest = max(longest, lengths[r])
        tags = np.full((n_sets, ways), -1, np.int64)
        stamps = np.full((n_sets, ways), -1, np.int64)
        clock = 0
        h = 0
        for s in range(longest):
            for r in range(lo, hi):
                if s < lengths[r]:
                    line = (np.int64(rec[rec_off[r] + s]) * stride) // line_bytes
                    if _lru_access(tags, stamps, line % n_sets, line // n_sets, clock):
                        h += 1
                    clock += 1
        hits[w] = h
        accesses[w] = clock
        max_steps[w] = longest
    return hits, accesses, max_steps


def cache_simulate(node_access_trace, config: CacheConfig = DEFAULT_CACHE) -> float:
    """Hit rate of a cold set-associative LRU cache on a node-id trace."""
    trace = np.asarray(node_access_trace, dtype=np.int64)
    if trace.size == 0:
        return 1.0
    hits = _simulate_trace(trace, config.n_sets, config.ways, config.line_bytes, config.node_stride)
    return hits / trace.size


def lockstep_trace(rec, rec_off, lengths, lo: int, hi: int) -> np.ndarray:
    """Node accesses of rays ``lo:hi`` interleaved round-robin, step by step."""
    out = []
    longest = int(np.max(lengths[lo:hi], initial=0))
    for s in range(longest):
        for r in range(lo, hi):
            if s < lengths[r]:
                out.append(int(rec[rec_off[r] + s]))
    return np.asarray(out, dtype=np.int64)


def simulate_warps(rec, rec_off, lengths, warp_size: int, config: CacheConfig = DEFAULT_CACHE):
    """Per-warp (hits, accesses, max steps), each warp with its own cold cache."""
    return _simulate_warps(rec, np.asarray(rec_off, np.int64), np.asarray(lengths, np.int64),
                           int(warp_size), config.n_sets, config.ways, config.line_bytes,
                           config.node_stride)
