import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from oracles import brute_force_hits, lru_hit_rate_naive, warp_efficiency_naive
from workloads import random_rays

from rayreorder.geom import Ray, RayBatch
from rayreorder.keys import KeyContext, KeyMethod
from rayreorder.sortreorder import pipeline
from rayreorder.tracer import (DEFAULT_CACHE, CacheConfig, any_hit, build_bvh, cache_simulate, closest_hit,
                               lockstep_trace, trace_batch, warp_efficiency)
from rayreorder.tracer.sim import simulate_warps

UNIT_TRI = np.array([[[0, 0, 0], [1, 0, 0], [0, 1, 0]]], float)


def test_single_triangle_leaf():
    bvh = build_bvh(UNIT_TRI)
    assert bvh.n_nodes == 1 and bvh.is_leaf(0)
    # boxes carry a relative padding of 1e-7 of the extent
    assert np.allclose(bvh.node_min[0], [0, 0, 0], atol=1e-6)
    assert np.allclose(bvh.node_max[0], [1, 1, 0], atol=1e-6)


def test_two_distant_triangles():
    tri = np.concatenate([UNIT_TRI, UNIT_TRI + 100.0])
    bvh = build_bvh(tri)
    assert bvh.n_nodes == 3
    assert bvh.is_leaf(bvh.left[0]) and bvh.is_leaf(bvh.right[0])


def test_empty_mesh_rejected():
    with pytest.raises(ValueError):
        build_bvh(np.zeros((0, 3, 3)))


def test_bvh_structure(small_scene):
    bvh = small_scene.bvh
    leaves = [n for n in range(bvh.n_nodes) if bvh.is_leaf(n)]
    ids = np.concatenate([bvh.leaf_triangles(n) for n in leaves])
    assert sorted(ids.tolist()) == list(range(len(small_scene.triangles)))
    assert max(bvh.count[n] for n in leaves) <= 4
    for n in range(bvh.n_nodes):
        if not bvh.is_leaf(n):
            for c in (bvh.left[n], bvh.right[n]):
                assert np.all(bvh.node_min[c] >= bvh.node_min[n]) and np.all(bvh.node_max[c] <= bvh.node_max[n])
            assert bvh.left[n] == n + 1  # depth-first layout
        else:
            tri = small_scene.triangles[bvh.leaf_triangles(n)]
            assert np.all(tri.min(axis=(0, 1)) >= bvh.node_min[n]) and np.all(tri.max(axis=(0, 1)) <= bvh.node_max[n])


def test_build_deterministic(small_scene):
    a = build_bvh(small_scene.triangles)
    b = build_bvh(small_scene.triangles)
    assert np.array_equal(a.node_min, b.node_min) and np.array_equal(a.tri_ids, b.tri_ids)


def test_perpendicular_hit_and_miss():
    bvh = build_bvh(UNIT_TRI)
    c = UNIT_TRI[0].mean(axis=0)
    rec, cnt = closest_hit(bvh, Ray(c + [0, 0, 2.5], np.array([0, 0, -1.0])))
    assert rec.hit and rec.t == pytest.approx(2.5) and rec.triangle == 0
    assert cnt.node_visits >= 1 and cnt.triangle_tests == 1
    rec, _ = closest_hit(bvh, Ray(c + [0, 0, 2.5], np.array([0, 0, 1.0])))
    assert not rec.hit and rec.t == np.inf


def test_tmax_and_tmin_bounds():
    bvh = build_bvh(UNIT_TRI)
    o = np.array([0.2, 0.2, 1.0])
    d = np.array([0, 0, -1.0])
    assert closest_hit(bvh, Ray(o, d, 1.0))[0].hit  # t == tmax is inside (T_MIN, tmax]
    assert not any_hit(bvh, Ray(o, d, 1.0))[0]  # any-hit interval is open at tmax
    assert any_hit(bvh, Ray(o, d, 1.0 + 1e-9))[0]
    assert not closest_hit(bvh, Ray(np.array([0.2, 0.2, 5e-5]), d))[0].hit  # below T_MIN


def test_any_hit_tests_not_more_than_closest(small_scene):
    rays = random_rays(np.random.default_rng(0), 3000, small_scene.aabb)
    rays.tmax[:] = 0.3
    _, sc = trace_batch(small_scene.bvh, rays, "closest", instrument=False)
    _, sa = trace_batch(small_scene.bvh, rays, "any", instrument=False)
    assert np.all(sa.triangle_tests <= sc.triangle_tests)


def _oracle_check(scene, n, seed, any_mode):
    rng = np.random.default_rng(seed)
    rays = random_rays(rng, n, scene.aabb)
    if any_mode:
        rays.tmax[:] = rng.random(n) * 0.6 * scene.extent + 1e-3
    res, _ = trace_batch(scene.bvh, rays, "any" if any_mode else "closest", instrument=False)
    hit, t = brute_force_hits(scene.triangles, rays.origins, rays.directions, rays.tmax, any_mode)
    return res, hit, t


def test_closest_hit_matches_brute_force(small_scene):
    res, hit, t = _oracle_check(small_scene, 2000, 1, False)
    assert np.array_equal(res.hit, hit)
    assert np.allclose(res.t[hit], t[hit], rtol=1e-5)
    rays = random_rays(np.random.default_rng(1), 2000, small_scene.aabb)
    for i in range(20):
        rec, _ = closest_hit(small_scene.bvh, Ray(rays.origins[i], rays.directions[i]))
        assert rec.hit == res.hit[i] and rec.triangle == res.triangle[i]


def test_any_hit_matches_brute_force(small_scene):
    res, hit, _ = _oracle_check(small_scene, 2000, 2, True)
    assert np.array_equal(res.hit, hit)


def test_warp_efficiency_examples():
    assert warp_efficiency([4, 4, 4, 4], 4) == 1.0
    assert warp_efficiency([4, 0, 0, 0], 4) == 0.25
    assert warp_efficiency([2, 4], 2) == 0.75
    assert warp_efficiency([3], 64) == 1.0
    with pytest.raises(ValueError):
        warp_efficiency([], 4)
    with pytest.raises(ValueError):
        warp_efficiency([0, 0], 2)


@given(st.lists(st.integers(0, 50), min_size=1, max_size=200), st.sampled_from([1, 2, 4, 32, 64]))
def test_warp_efficiency_matches_naive(steps, w):
    if max(steps) == 0:
        return
    e = warp_efficiency(steps, w)
    assert e == pytest.approx(warp_efficiency_naive(steps, w), rel=1e-12)
    assert 0 < e <= 1


@given(st.lists(st.integers(1, 50), min_size=1, max_size=63))
def test_warp_efficiency_append_max_duplicate(steps):
    """Appending a copy of the group maximum leaves the idle-slot count unchanged
    and never lowers the efficiency."""
    m = max(steps)
    before = warp_efficiency(steps, 64)
    after = warp_efficiency(steps + [m], 64)
    assert after >= before - 1e-12
    assert len(steps) * m - sum(steps) == (len(steps) + 1) * m - (sum(steps) + m)


def test_cache_examples():
    assert cache_simulate([]) == 1.0
    assert cache_simulate([7] * 10) == pytest.approx(9 / 10)
    working = np.arange(500)  # 500 nodes * 32 B = 16 KB < 32 KiB
    two = np.concatenate([working, working])
    first = lru_hit_rate_naive(working)
    assert cache_simulate(two) == pytest.approx((first * 500 + 500) / 1000)


@given(st.lists(st.integers(0, 5000), max_size=400))
def test_cache_matches_naive_lru(trace):
    assert cache_simulate(trace) == pytest.approx(lru_hit_rate_naive(trace))


def test_cache_config_variants():
    trace = np.random.default_rng(0).integers(0, 3000, 2000)
    cfg = CacheConfig(size_bytes=4096, line_bytes=64, ways=2, node_stride=16)
    assert cache_simulate(trace, cfg) == pytest.approx(lru_hit_rate_naive(trace, 4096, 64, 2, 16))
    with pytest.raises(ValueError):
        CacheConfig(size_bytes=64, line_bytes=128).n_sets


def test_lockstep_trace_and_warp_replay():
    rec = np.array([0, 1, 2, 10, 11, 20], np.int32)
    off = np.array([0, 3, 5])
    lengths = np.array([3, 2, 1])
    assert lockstep_trace(rec, off, lengths, 0, 3).tolist() == [0, 10, 20, 1, 11, 2]
    hits, acc, steps = simulate_warps(rec, off, lengths, 2, DEFAULT_CACHE)
    assert acc.tolist() == [5, 1] and steps.tolist() == [3, 1]
    assert hits[0] == round(lru_hit_rate_naive(lockstep_trace(rec, off, lengths, 0, 2)) * 5)


def test_trace_batch_identical_and_single():
    bvh = build_bvh(UNIT_TRI)
    rays = RayBatch(np.tile([0.2, 0.2, 1.0], (100, 1)), np.tile([0, 0, -1.0], (100, 1)), np.inf, 0)
    _, st_ = trace_batch(bvh, rays)
    assert st_.warp_efficiency == 1.0
    _, st1 = trace_batch(bvh, rays.take([0]), warp_size=32)
    assert st1.warp_efficiency == 1.0
    with pytest.raises(ValueError):
        trace_batch(bvh, rays, warp_size=16)
    with pytest.raises(ValueError):
        trace_batch(bvh, rays, mode="nearest")


def test_trace_batch_cache_rate_matches_replay(small_scene):
    rays = random_rays(np.random.default_rng(4), 300, small_scene.aabb)
    _, st_ = trace_batch(small_scene.bvh, rays, warp_size=32)
    assert st_.cache_accesses == int(st_.node_visits.sum())
    assert 0 <= st_.cache_hit_rate <= 1
    assert st_.cache_hit_rate == st_.cache_hits / st_.cache_accesses


def test_sorted_batch_improves_proxies(small_scene):
    rays = random_rays(np.random.default_rng(5), 20_000, small_scene.aabb)
    ctx = KeyContext(small_scene.aabb)
    rep = pipeline(rays, KeyMethod.AILA_COMPACT, ctx)
    _, su = trace_batch(small_scene.bvh, rays)
    _, ss = trace_batch(small_scene.bvh, rep.rays)
    assert ss.warp_efficiency >= su.warp_efficiency
    assert ss.cache_hit_rate >= su.cache_hit_rate
    # work-invariance control: reordering changes grouping, not per-ray traversal
    assert np.array_equal(ss.node_visits, su.node_visits[rep.ordering])
    assert ss.node_visits.sum() == su.node_visits.sum()


def test_results_independent_of_order(small_scene):
    rays = random_rays(np.random.default_rng(6), 2000, small_scene.aabb)
    p = np.random.default_rng(7).permutation(2000)
    a, _ = trace_batch(small_scene.bvh, rays, instrument=False)
    b, _ = trace_batch(small_scene.bvh, rays.take(p), instrument=False)
    assert np.array_equal(a.t[p], b.t) and np.array_equal(a.triangle[p], b.triangle)
