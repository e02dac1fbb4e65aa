"""Binned-SAH BVH over triangles, stored as flat arrays in depth-first order."""
from __future__ import annotations

from dataclasses import dataclass

import numba as nb
import numpy as np

from ..geom import Aabb

N_BINS = 8
MAX_LEAF = 4


@dataclass(frozen=True)
class Bvh:
    node_min: np.ndarray  # (N, 3)
    node_max: np.ndarray
    left: np.ndarray  # int32, -1 for leaves
    right: np.ndarray
    start: np.ndarray  # first triangle (into the reordered triangle arrays)
    count: np.ndarray  # 0 for inner nodes
    axis: np.ndarray  # split axis of inner nodes
    v0: np.ndarray  # (M, 3) triangle data in leaf order
    e1: np.ndarray
    e2: np.ndarray
    tri_ids: np.ndarray  # original triangle index per leaf slot
    aabb: Aabb

    @property
    def n_nodes(self) -> int:
        return len(self.left)

    @property
    def n_triangles(self) -> int:
        return len(self.tri_ids)

    def is_leaf(self, node: int) -> bool:
        return self.left[node] < 0

    def leaf_triangles(self, node: int) -> np.ndarray:
        s, c = self.start[node], self.count[node]
        return self.tri_ids[s : s + c]

    def depth(self) -> int:
        best, stack = 0, [(0, 1)]
        while stack:
            n, d = stack.pop()
            best = max(best, d)
            if self.left[n] >= 0:
                stack.append((self.left[n], d + 1))
                stack.append((self.right[n], d + 1))
        return best


def _area(lo, hi):
    d = hi - lo
    if d[0] < 0:
        return 0.0
    return 2.0 * (d[0] * d[1] + d[1] * d[2] + d[2] * d[0])


_area_nb = nb.njit(cache=True)(_area)


@nb.njit(cache=True)
def _build(tmin, tmax, cen, perm, node_min, node_max, left, right, start, count, axis_out):
    n_nodes = 0
    # stack entries: start, end, parent (or -1), is_right_child
    st_s = np.empty(4096, np.int64)
    st_e = np.empty(4096, np.int64)
    st_p = np.empty(4096, np.int64)
    sp = 0
    st_s[0] = 0
    st_e[0] = len(perm)
    st_p[0] = -1
    sp = 1
    bin_min = np.empty((N_BINS, 3))
    bin_max = np.empty((N_BINS, 3))
    bin_cnt = np.zeros(N_BINS, np.int64)
    right_area = np.empty(N_BINS)
    while sp > 0:
        sp -= 1
        s = st_s[sp]
        e = st_e[sp]
        parent = st_p[sp]
        node = n_nodes
        n_nodes += 1
        if parent >= 0:
            right[parent] = node

        lo = np.full(3, np.inf)
        hi = np.full(3, -np.inf)
        clo = np.full(3, np.inf)
        chi = np.full(3, -np.inf)
        for i in range(s, e):
            t = perm[i]
            for a in range(3):
                lo[a] = min(lo[a], tmin[t, a])
                hi[a] = max(hi[a], tmax[t, a])
                clo[a] = min(clo[a], cen[t, a])
                chi[a] = max(chi[a], cen[t, a])
        node_min[node] = lo
        node_max[node] = hi
        n = e - s
        left[node] = -1
        right[node] = -1
        start[node] = s
        count[node] = n
        axis_out[node] = 0
        if n == 1:
            continue

        best_cost = np.inf
        best_axis = -1
        best_split = -1
        for a in range(3):
            ext = chi[a] - clo[a]
            if ext <= 0.0:
                continue
            bin_cnt[:] = 0
            bin_min[:, :] = np.inf
            bin_max[:, :] = -np.inf
            k = N_BINS / ext
            for i in range(s, e):
                t = perm[i]
                b = int((cen[t, a] - clo[a]) * k)
                if b >= N_BINS:
                    b = N_BINS - 1
                bin_cnt[b] += 1
                for c in range(3):
                    bin_min[b, c] = min(bin_min[b, c], tmin[t, c])
                    bin_max[b, c] = max(bin_max[b, c], tmax[t, c])
            # sweep from the right
            rlo = np.full(3, np.inf)
            rhi = np.full(3, -np.inf)
            for b in range(N_BINS - 1, 0, -1):
                for c in range(3):
                    rlo[c] = min(rlo[c], bin_min[b, c])
                    rhi[c] = max(rhi[c], bin_max[b, c])
                right_area[b] = _area_nb(rlo, rhi)
            llo = np.full(3, np.inf)
            lhi = np.full(3, -np.inf)
            n_left = 0
            for b in range(N_BINS - 1):
                n_left += bin_cnt[b]
                for c in range(3):
                    llo[c] = min(llo[c], bin_min[b, c])
                    lhi[c] = max(lhi[c], bin_max[b, c])
                n_right = n - n_left
                if n_left == 0 or n_right == 0:
                    continue
                cost = _area_nb(llo, lhi) * n_left + right_area[b + 1] * n_right
                if cost < best_cost:
                    best_cost = cost
                    best_axis = a
                    best_split = b

        if n <= MAX_LEAF:
            # small node: keep it a leaf unless the SAH split is cheaper
            # (traversal cost 1, intersection cost 1 per triangle)
            parent_area = _area_nb(lo, hi)
            if best_axis < 0 or parent_area <= 0.0 or 1.0 + best_cost / parent_area >= n:
                continue
        if best_axis < 0:
            mid = s + n // 2  # coincident centroids: split by index
        else:
            a = best_axis
            k = N_BINS / (chi[a] - clo[a])
            i = s
            j = e - 1
            while i <= j:
                b = int((cen[perm[i], a] - clo[a]) * k)
                if b >= N_BINS:
                    b = N_BINS - 1
                if b <= best_split:
                    i += 1
                else:
                    tmp = perm[i]
                    perm[i] = perm[j]
                    perm[j] = tmp
                    j -= 1
            mid = i
            axis_out[node] = a
        left[node] = node + 1
        count[node] = 0
        if sp + 2 > len(st_s):
            raise RuntimeError("BVH build stack overflow")
        # right first so the left child is popped next and lands at node + 1
        st_s[sp] = mid
        st_e[sp] = e
        st_p[sp] = node
        sp += 1
        st_s[sp] = s
        st_e[sp] = mid
        st_p[sp] = -1
        sp += 1
    return n_nodes


def triangle_areas(triangles: np.ndarray) -> np.ndarray:
    tri = np.asarray(triangles, dtype=np.float64)
    return 0.5 * np.linalg.norm(np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0]), axis=1)


def build_bvh(triangles) -> Bvh:
    """Top-down binned SAH build (8 bins, at most 4 triangles per leaf).

    ``triangles`` has shape (M, 3, 3).  The build is deterministic for a
    fixed input order.
    """
    tri = np.ascontiguousarray(triangles, dtype=np.float64).reshape(-1, 3, 3)
    if len(tri) == 0:
        raise ValueError("cannot build a BVH over an empty mesh")
    tmin = tri.min(axis=1)
    tmax = tri.max(axis=1)
    cen = tri.mean(axis=1)
    m = len(tri)
    cap = 2 * m
    perm = np.arange(m, dtype=np.int64)
    node_min = np.empty((cap, 3))
    node_max = np.empty((cap, 3))
    left = np.empty(cap, np.int32)
    right = np.empty(cap, np.int32)
    start = np.empty(cap, np.int32)
    count = np.empty(cap, np.int32)
    axis = np.empty(cap, np.int32)
    n = _build(tmin, tmax, cen, perm, node_min, node_max, left, right, start, count, axis)
    aabb = Aabb(tmin.min(axis=0), tmax.max(axis=0))
    # pad boxes so grazing rays are never culled by rounding
    pad = 1e-7 * max(float(np.max(aabb.extent)), 1e-12)
    t = tri[perm]
    return Bvh(
        node_min[:n] - pad,
        node_max[:n] + pad,
        left[:n].copy(),
        right[:n].copy(),
        start[:n].copy(),
        count[:n].copy(),
        axis[:n].copy(),
        np.ascontiguousarray(t[:, 0]),
        np.ascontiguousarray(t[:, 1] - t[:, 0]),
        np.ascontiguousarray(t[:, 2] - t[:, 0]),
        perm.astype(np.int32),
        aabb,
    )
