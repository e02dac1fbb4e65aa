import io
import math

import numpy as np
import pytest

from rayreorder.geom import RayKind
from rayreorder.harness import (BenchRow, RenderConfig, correlate_report, gen_procedural_scene, load_obj,
                                load_scene, parse_obj, path_trace_wavefront, read_csv, run_benchmark, write_csv)
from rayreorder.harness.bench import FIELDNAMES
from rayreorder.harness.scene import ObjParseError
from rayreorder.keys import KeyMethod

TINY = RenderConfig(width=16, height=16, samples_per_pixel=2, max_bounces=3, seed=1)


def test_obj_triangle_and_quad():
    tri = parse_obj(["v 0 0 0", "v 1 0 0", "v 0 1 0", "f 1 2 3"])
    assert tri.shape == (1, 3, 3)
    quad = parse_obj(["v 0 0 0", "v 1 0 0", "v 1 1 0", "v 0 1 0", "vn 0 0 1", "f 1//1 2//1 3//1 4//1"])
    assert quad.shape == (2, 3, 3)
    assert np.allclose(quad[1], [[0, 0, 0], [1, 1, 0], [0, 1, 0]])  # fan around the first vertex


def test_obj_negative_indices_and_ignored_records():
    lines = ["# comment", "mtllib a.mtl", "o thing", "v 0 0 0", "v 2 0 0", "v 0 2 0", "vt 0 0",
             "usemtl red", "f -3 -2 -1"]
    tri = parse_obj(lines)
    assert np.allclose(tri[0], [[0, 0, 0], [2, 0, 0], [0, 2, 0]])


def test_obj_drops_degenerate():
    tri = parse_obj(["v 0 0 0", "v 1 0 0", "v 0 1 0", "v 2 0 0", "f 1 2 3", "f 1 2 4"])
    assert len(tri) == 1


@pytest.mark.parametrize("lines, line", [
    (["v 0 0", "f 1 1 1"], 1),
    (["v 0 0 0", "v a 0 0"], 2),
    (["v 0 0 0", "v 1 0 0", "v 0 1 0", "f 1 2"], 4),
    (["v 0 0 0", "v 1 0 0", "v 0 1 0", "f 1 2 5"], 4),
    (["v 0 0 0", "v 1 0 0", "v 0 1 0", "f 0 1 2"], 4),
])
def test_obj_errors_carry_line(lines, line):
    with pytest.raises(ObjParseError) as exc:
        parse_obj(lines)
    assert exc.value.line == line and f"line {line}" in str(exc.value)


def test_obj_empty_and_file(tmp_path):
    with pytest.raises(ValueError):
        parse_obj(["v 0 0 0"])
    p = tmp_path / "m.obj"
    p.write_text("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n")
    tri, box = load_obj(p)
    assert len(tri) == 1 and np.allclose(box.max, [1, 1, 0])
    scene = load_scene(str(p))
    assert len(scene.triangles) >= 1


def test_procedural_determinism_and_growth():
    a = gen_procedural_scene(7, 10)
    b = gen_procedural_scene(7, 10)
    assert np.array_equal(a.triangles, b.triangles)
    counts = [len(gen_procedural_scene(7, c).triangles) for c in (1, 2, 5, 10, 20)]
    assert counts == sorted(counts) and len(set(counts)) == len(counts)
    with pytest.raises(ValueError):
        gen_procedural_scene(7, 0)
    assert np.array_equal(load_scene("procedural:10", 7).triangles, a.triangles)


def test_light_sized_from_extent():
    s = gen_procedural_scene(0, 3)
    assert np.linalg.norm(s.light.edge_u) == pytest.approx(0.05 * s.extent, rel=1e-9)
    assert np.linalg.norm(s.light.edge_v) == pytest.approx(0.05 * s.extent, rel=1e-9)
    assert s.light.normal[1] < 0


def test_render_config_validation():
    with pytest.raises(ValueError):
        RenderConfig(width=0)
    with pytest.raises(ValueError):
        RenderConfig(methods=())
    with pytest.raises(ValueError):
        RenderConfig(warp_size=16)
    with pytest.raises(ValueError):
        RenderConfig(max_bounces=-1)


def test_no_bounces_gives_primary_only(small_scene):
    cfg = RenderConfig(width=8, height=8, samples_per_pixel=1, max_bounces=0)
    res = path_trace_wavefront(small_scene, cfg)
    assert [(b.bounce, b.kind) for b in res.batches] == [(0, RayKind.PRIMARY)]
    assert len(res.batches[0].rays) == 64


def test_batch_structure(small_scene):
    res = path_trace_wavefront(small_scene, TINY)
    path = [b for b in res.batches if b.kind != RayKind.SHADOW]
    shadow = {b.bounce: b for b in res.batches if b.kind == RayKind.SHADOW}
    assert len(path[0].rays) == 16 * 16 * 2
    sizes = [len(b.rays) for b in path]
    assert sizes == sorted(sizes, reverse=True)
    for b in path:
        if b.bounce in shadow:
            assert len(shadow[b.bounce].rays) == 2 * int(b.live.sum())
    for b in res.batches:
        b.rays.validate()
        assert np.all(b.rays.tmax > 0)
        if b.kind == RayKind.SHADOW:
            assert np.all(np.isfinite(b.rays.tmax))


def test_render_deterministic(small_scene):
    a = path_trace_wavefront(small_scene, TINY, keep_batches=False).image
    b = path_trace_wavefront(small_scene, TINY, keep_batches=False).image
    assert a.shape == (16, 16) and np.array_equal(a, b) and a.sum() > 0
    c = path_trace_wavefront(small_scene, RenderConfig(**{**TINY.__dict__, "seed": 2}), keep_batches=False).image
    assert not np.array_equal(a, c)


@pytest.fixture(scope="module")
def tiny_rows(small_scene):
    return run_benchmark(TINY, [small_scene])


def test_benchmark_grid(tiny_rows):
    cells = {(r.bounce, r.kind) for r in tiny_rows}
    methods = {r.method for r in tiny_rows}
    assert methods == {m.value for m in KeyMethod}
    assert len(tiny_rows) == len(cells) * len(methods)
    for r in tiny_rows:
        if r.method == KeyMethod.UNSORTED.value:
            assert (r.rel_measure, r.rel_sim_cost, r.rel_trace_ms, r.rel_warp_efficiency,
                    r.rel_cache_hit_rate) == (1.0, 1.0, 1.0, 1.0, 1.0)
            assert r.overhead_ms == 0.0
        assert r.overhead_ms == r.code_ms + r.sort_ms + r.reorder_ms + r.accum_ms
        assert (r.pretrace_node_visits > 0) == (r.method == KeyMethod.TWO_POINT_REAL.value)


def test_benchmark_work_invariance(tiny_rows):
    by_cell = {}
    for r in tiny_rows:
        by_cell.setdefault((r.bounce, r.kind), set()).add((r.n_rays, r.node_visits, r.triangle_tests))
    assert all(len(v) == 1 for v in by_cell.values())


def test_unsorted_only(small_scene):
    cfg = RenderConfig(**{**TINY.__dict__, "methods": (KeyMethod.UNSORTED,), "max_bounces": 1})
    rows = run_benchmark(cfg, [small_scene])
    assert {r.method for r in rows} == {"Unsorted"}
    assert all(r.rel_measure == 1.0 and r.rel_sim_cost == 1.0 for r in rows)


def test_unsorted_always_included(small_scene):
    cfg = RenderConfig(**{**TINY.__dict__, "methods": (KeyMethod.AILA,), "max_bounces": 1})
    rows = run_benchmark(cfg, [small_scene])
    assert "Unsorted" in {r.method for r in rows}
    with pytest.raises(ValueError):
        run_benchmark(cfg, [])


def test_image_invariant_under_reordering(small_scene):
    from rayreorder.estimator import EstimatorConfig, table_init
    from rayreorder.harness import reordering_trace
    from rayreorder.keys import KeyContext

    base = path_trace_wavefront(small_scene, TINY, keep_batches=False).image
    for m in KeyMethod:
        est = EstimatorConfig.for_aabb(small_scene.aabb)
        ctx = KeyContext(small_scene.aabb, 32, est, table_init(est), small_scene.bvh)
        img = path_trace_wavefront(small_scene, TINY, reordering_trace(small_scene, m, ctx),
                                   keep_batches=False).image
        assert np.allclose(img, base, rtol=1e-6, atol=0), m


def test_csv_round_trip(tiny_rows, tmp_path):
    p = tmp_path / "b.csv"
    write_csv(tiny_rows, p)
    raw = p.read_bytes()
    assert raw.count(b"\r\n") == len(tiny_rows) + 1
    back = read_csv(p)
    assert list(back[0]) == FIELDNAMES
    for r, d in zip(tiny_rows, back):
        assert float(d["mean_capsule_area"]) == r.mean_capsule_area
        assert int(d["node_visits"]) == r.node_visits
    buf = io.StringIO()
    write_csv(tiny_rows[:1], buf)
    assert buf.getvalue().splitlines()[0].split(",") == FIELDNAMES


def _row(method, kind, measure, cost, bounce=2, scene="s"):
    return BenchRow(scene, method, bounce, kind, 64, *([0.0] * 6), 0, 0.0, 1, 1, 1.0, 1.0, cost, measure,
                    rel_measure=measure, rel_sim_cost=cost, rel_trace_ms=cost)


def test_correlate_report_synthetic():
    rows = []
    for i, m in enumerate(["Aila", "Costa", "Reis"]):
        for kind in ("secondary", "shadow"):
            rows.append(_row(m, kind, 0.5 + 0.1 * i, 2 * (0.5 + 0.1 * i)))
    rep = correlate_report(rows)
    assert rep[("all", "secondary", "sim")] == pytest.approx(1.0)
    assert rep[("all", "shadow", "wall")] == pytest.approx(1.0)
    assert rep[("s", "secondary", "sim")] == pytest.approx(1.0)
    flat = [_row(r.method, r.kind, 0.7, r.rel_sim_cost) for r in rows]
    with pytest.raises(ValueError):
        correlate_report(flat)
    with pytest.raises(ValueError):
        correlate_report([r for r in rows if r.method == "Aila"])


def test_shadow_accumulation_flag(small_scene):
    from rayreorder.harness.bench import SceneBench

    counts = {}
    for flag in (True, False):
        cfg = RenderConfig(**{**TINY.__dict__, "methods": (KeyMethod.TWO_POINT_ADAPTIVE,),
                              "accumulate_shadow": flag})
        bench = SceneBench(small_scene, cfg)
        path_trace_wavefront(small_scene, cfg, on_batch=bench, keep_batches=False)
        counts[flag] = int(bench.table.count.sum())
    assert counts[True] > counts[False] > 2**20
