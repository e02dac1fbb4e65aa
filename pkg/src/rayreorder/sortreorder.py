"""Stable LSD radix sort of key/index pairs, segmented sorting and ray gather."""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numba as nb
import numpy as np

from .geom import RayBatch
from .keys import KeyContext, KeyMethod, compute_keys

DIGIT_BITS = 8
RADIX = 1 << DIGIT_BITS
N_CHUNKS = 16  # fixed, so the merge order never depends on the thread count
PHASES = ("code", "sort", "reorder", "accum")
SEGMENT_SIZES = (0, 1024, 2048, 4096)


@dataclass(frozen=True)
class SortPlan:
    segment_size: int = 0
    key_bits: int = 32

    def __post_init__(self):
        s = self.segment_size
        if s != 0 and (s < 64 or s & (s - 1)):
            raise ValueError(f"segment_size must be 0 or a power of two >= 64, got {s}")
        if self.key_bits not in (32, 64):
            raise ValueError("key_bits must be 32 or 64")


@nb.njit(cache=True, parallel=True)
def _radix_pass(keys_in, idx_in, keys_out, idx_out, shift, n_chunks):
    n = len(keys_in)
    chunk = (n + n_chunks - 1) // n_chunks
    hist = np.zeros((n_chunks, RADIX), np.int64)
    for c in nb.prange(n_chunks):
        for i in range(c * chunk, min(n, (c + 1) * chunk)):
            hist[c, (keys_in[i] >> shift) & (RADIX - 1)] += 1
    # exclusive prefix over (digit, chunk) in that order keeps the pass stable
    offsets = np.empty((n_chunks, RADIX), np.int64)
    total = 0
    for dgt in range(RADIX):
        for c in range(n_chunks):
            offsets[c, dgt] = total
            total += hist[c, dgt]
    for c in nb.prange(n_chunks):
        off = offsets[c].copy()
        for i in range(c * chunk, min(n, (c + 1) * chunk)):
            dgt = (keys_in[i] >> shift) & (RADIX - 1)
            keys_out[off[dgt]] = keys_in[i]
            idx_out[off[dgt]] = idx_in[i]
            off[dgt] += 1


def radix_sort_pairs(keys, indices=None, key_bits: int = 32):
    """Stable sort of (key, index) pairs by key; returns sorted copies.

    8-bit digits: four passes for 32-bit keys, eight for 64-bit keys.

    >>> radix_sort_pairs(np.array([3, 1, 2], np.uint32))[1].tolist()
    [1, 2, 0]
    """
    if key_bits not in (32, 64):
        raise ValueError("key_bits must be 32 or 64")
    k = np.array(keys, dtype=np.uint32 if key_bits == 32 else np.uint64)
    idx = np.arange(len(k), dtype=np.int64) if indices is None else np.array(indices, dtype=np.int64)
    if len(idx) != len(k):
        raise ValueError("keys and indices differ in length")
    if len(k) < 2:
        return k, idx
    k2 = np.empty_like(k)
    i2 = np.empty_like(idx)
    for p in range(key_bits // DIGIT_BITS):
        _radix_pass(k, idx, k2, i2, k.dtype.type(p * DIGIT_BITS), N_CHUNKS)
        k, k2 = k2, k
        idx, i2 = i2, idx
    return k, idx


@nb.njit(cache=True, parallel=True)
def _segmented(keys, idx, seg, passes):
    n = len(keys)
    n_seg = (n + seg - 1) // seg
    for s in nb.prange(n_seg):
        lo = s * seg
        hi = min(n, lo + seg)
        k = keys[lo:hi].copy()
        ix = idx[lo:hi].copy()
        k2 = np.empty_like(k)
        i2 = np.empty_like(ix)
        cnt = np.empty(RADIX, np.int64)
        for p in range(passes):
            shift = p * DIGIT_BITS
            cnt[:] = 0
            for i in range(len(k)):
                cnt[(k[i] >> shift) & (RADIX - 1)] += 1
            total = 0
            for d in range(RADIX):
                c = cnt[d]
                cnt[d] = total
                total += c
            for i in range(len(k)):
                d = (k[i] >> shift) & (RADIX - 1)
                k2[cnt[d]] = k[i]
                i2[cnt[d]] = ix[i]
                cnt[d] += 1
            k, k2 = k2, k
            ix, i2 = i2, ix
        keys[lo:hi] = k
        idx[lo:hi] = ix


def segmented_sort_pairs(keys, indices=None, plan: SortPlan | int = SortPlan()):
    """Stable sort inside consecutive blocks of ``plan.segment_size`` pairs.

    ``plan`` is a :class:`SortPlan` or a bare segment size (any size >= 0,
    key width taken from the key dtype).  A segment size of 0 means one
    global sort.  Pairs never cross a block
    boundary; the last block may be partial.
    """
    if isinstance(plan, SortPlan):
        seg, key_bits = plan.segment_size, plan.key_bits
    else:
        seg, key_bits = int(plan), 32 if np.asarray(keys).dtype.itemsize <= 4 else 64
        if seg < 0:
            raise ValueError("segment size must be non-negative")
    if seg == 0 or seg >= len(keys):
        return radix_sort_pairs(keys, indices, key_bits)
    k = np.array(keys, dtype=np.uint32 if key_bits == 32 else np.uint64)
    idx = np.arange(len(k), dtype=np.int64) if indices is None else np.array(indices, dtype=np.int64)
    if seg > 1:
        _segmented(k, idx, seg, key_bits // DIGIT_BITS)
    return k, idx


def inverse_permutation(perm) -> np.ndarray:
    perm = np.asarray(perm, dtype=np.int64)
    inv = np.empty_like(perm)
    inv[perm] = np.arange(len(perm), dtype=np.int64)
    return inv


def check_permutation(perm, n: int) -> np.ndarray:
    perm = np.asarray(perm)
    if perm.shape != (n,) or not np.issubdtype(perm.dtype, np.integer):
        raise ValueError("indices must be an integer permutation of the batch")
    seen = np.zeros(n, dtype=bool)
    if n and (perm.min() < 0 or perm.max() >= n):
        raise ValueError("indices out of range")
    seen[perm] = True
    if not seen.all():
        raise ValueError("indices are not a permutation")
    return perm.astype(np.int64)


def gather_reorder(rays: RayBatch, sorted_indices):
    """Physically reorder the batch: ``out[i] = rays[indices[i]]``.

    Returns the reordered batch and the inverse permutation that scatters
    per-ray results back to the original order.
    """
    perm = check_permutation(sorted_indices, len(rays))
    return rays.take(perm), inverse_permutation(perm)


def scatter(values, inverse) -> np.ndarray:
    """Undo a gather: ``scatter(gathered, inverse)[j]`` is the value of original ray j."""
    return np.asarray(values)[np.asarray(inverse)]


@dataclass
class ReorderReport:
    ordering: np.ndarray
    rays: RayBatch | None
    inverse: np.ndarray
    timings: dict = field(default_factory=lambda: dict.fromkeys(PHASES, 0.0))
    pretrace_ms: float = 0.0

    @property
    def total_overhead(self) -> float:
        return sum(self.timings[p] for p in PHASES)


def pipeline(rays: RayBatch, method: KeyMethod, ctx: KeyContext, plan: SortPlan = SortPlan(),
             gather: bool = True) -> ReorderReport:
    """Keys, sort, reorder, each phase timed in milliseconds.

    With ``gather=False`` the rays are not moved and only the ordering is
    returned (indirect access through a sorted index buffer).  The ``accum``
    phase is filled by whoever updates the adaptive table after the trace.
    """
    method = KeyMethod(method)
    n = len(rays)
    if method is KeyMethod.UNSORTED:
        ident = np.arange(n, dtype=np.int64)
        return ReorderReport(ident, rays if gather else None, ident)
    timings = dict.fromkeys(PHASES, 0.0)
    kt: dict = {}
    keys = compute_keys(rays, method, ctx, kt)
    timings["code"] = kt["code"]
    t0 = time.perf_counter()
    _, order = segmented_sort_pairs(keys, None, SortPlan(plan.segment_size, ctx.key_bits))
    timings["sort"] = (time.perf_counter() - t0) * 1e3
    out = None
    if gather:
        t0 = time.perf_counter()
        out, inverse = gather_reorder(rays, order)
        timings["reorder"] = (time.perf_counter() - t0) * 1e3
    else:
        inverse = inverse_permutation(order)
    return ReorderReport(order, out, inverse, timings, kt["pretrace"])
