"""Numba traversal kernels: closest hit and any hit with per-ray counters."""
from __future__ import annotations

import numba as nb
import numpy as np

T_MIN = 1e-4
DET_EPS = 1e-7
STACK_SIZE = 256
_TINY = 1e-30


@nb.njit(cache=True, inline="always")
def _intersect(o0, o1, o2, d0, d1, d2, v0, e1, e2):
    """Möller-Trumbore; returns t or inf."""
    p0 = d1 * e2[2] - d2 * e2[1]
    p1 = d2 * e2[0] - d0 * e2[2]
    p2 = d0 * e2[1] - d1 * e2[0]
    det = e1[0] * p0 + e1[1] * p1 + e1[2] * p2
    if abs(det) < DET_EPS:
        return np.inf
    inv = 1.0 / det
    s0 = o0 - v0[0]
    s1 = o1 - v0[1]
    s2 = o2 - v0[2]
    u = (s0 * p0 + s1 * p1 + s2 * p2) * inv
    if u < 0.0 or u > 1.0:
        return np.inf
    q0 = s1 * e1[2] - s2 * e1[1]
    q1 = s2 * e1[0] - s0 * e1[2]
    q2 = s0 * e1[1] - s1 * e1[0]
    v = (d0 * q0 + d1 * q1 + d2 * q2) * inv
    if v < 0.0 or u + v > 1.0:
        return np.inf
    return (e2[0] * q0 + e2[1] * q1 + e2[2] * q2) * inv


@nb.njit(cache=True, inline="always")
def _safe_inv(x):
    if abs(x) < _TINY:
        return 1.0 / _TINY if x >= 0.0 else -1.0 / _TINY
    return 1.0 / x


@nb.njit(cache=True)
def _trace_one(o, d, tmax, any_hit, node_min, node_max, left, right, start, count, axis,
               v0, e1, e2, rec, rec_pos):
    """Trace one ray.  Writes visited node ids to ``rec`` from ``rec_pos`` if
    ``rec`` is non-empty.  Returns (t, slot, visits, tests)."""
    o0, o1, o2 = o[0], o[1], o[2]
    d0, d1, d2 = d[0], d[1], d[2]
    i0 = _safe_inv(d0)
    i1 = _safe_inv(d1)
    i2 = _safe_inv(d2)
    best = tmax
    slot = -1
    visits = 0
    tests = 0
    record = len(rec) > 0
    stack = np.empty(STACK_SIZE, np.int32)
    sp = 0
    stack[0] = 0
    sp = 1
    while sp > 0:
        sp -= 1
        node = stack[sp]
        if record:
            rec[rec_pos + visits] = node
        visits += 1
        ta = (node_min[node, 0] - o0) * i0
        tb = (node_max[node, 0] - o0) * i0
        tn = min(ta, tb)
        tf = max(ta, tb)
        ta = (node_min[node, 1] - o1) * i1
        tb = (node_max[node, 1] - o1) * i1
        tn = max(tn, min(ta, tb))
        tf = min(tf, max(ta, tb))
        ta = (node_min[node, 2] - o2) * i2
        tb = (node_max[node, 2] - o2) * i2
        tn = max(tn, min(ta, tb))
        tf = min(tf, max(ta, tb)) * 1.0000001
        if tn > tf or tf < T_MIN or tn > best:
            continue
        if left[node] < 0:
            s = start[node]
            for k in range(s, s + count[node]):
                tests += 1
                t = _intersect(o0, o1, o2, d0, d1, d2, v0[k], e1[k], e2[k])
                if any_hit:
                    if t > T_MIN and t < tmax:
                        return t, k, visits, tests
                elif t > T_MIN and t < np.inf and t <= best and (slot < 0 or t < best):
                    best = t
                    slot = k
        else:
            a = axis[node]
            if d[a] >= 0.0:
                near = left[node]
                far = right[node]
            else:
                near = right[node]
                far = left[node]
            if sp + 2 > STACK_SIZE:
                raise RuntimeError("traversal stack overflow")
            stack[sp] = far
            stack[sp + 1] = near
            sp += 2
    if slot < 0:
        return np.inf, -1, visits, tests
    return best, slot, visits, tests


@nb.njit(cache=True, parallel=True)
def trace_kernel(origins, directions, tmax, any_hit, node_min, node_max, left, right, start,
                 count, axis, v0, e1, e2, rec, rec_off):
    n = len(origins)
    t_out = np.empty(n)
    slot_out = np.empty(n, np.int64)
    visits = np.empty(n, np.int64)
    tests = np.empty(n, np.int64)
    for i in nb.prange(n):
        pos = rec_off[i] if len(rec) > 0 else 0
        t, s, v, k = _trace_one(origins[i], directions[i], tmax[i], any_hit, node_min, node_max,
                                left, right, start, count, axis, v0, e1, e2, rec, pos)
        t_out[i] = t
        slot_out[i] = s
        visits[i] = v
        tests[i] = k
    return t_out, slot_out, visits, tests


def run(bvh, origins, directions, tmax, any_hit: bool, rec=None, rec_off=None):
    if rec is None:
        rec = np.empty(0, np.int32)
        rec_off = np.empty(0, np.int64)
    return trace_kernel(
        np.ascontiguousarray(origins, dtype=np.float64),
        np.ascontiguousarray(directions, dtype=np.float64),
        np.ascontiguousarray(tmax, dtype=np.float64),
        bool(any_hit),
        bvh.node_min, bvh.node_max, bvh.left, bvh.right, bvh.start, bvh.count, bvh.axis,
        bvh.v0, bvh.e1, bvh.e2, rec, rec_off,
    )
