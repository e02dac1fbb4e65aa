"""Benchmark orchestration: every method on every traced batch of a render."""
from __future__ import annotations

import csv
import time
from collections import defaultdict
from dataclasses import asdict, dataclass, fields

import numpy as np

from ..coherence import SUBSET_SIZE, pearson, subset_areas
from ..estimator import EstimatorConfig, table_accumulate, table_init, terminate_real
from ..geom import RayKind
from ..keys import KeyContext, KeyMethod
from ..sortreorder import PHASES, pipeline
from ..tracer import DEFAULT_CACHE, TraceResult, trace_batch
from .render import BounceBatch, RenderConfig, path_trace_wavefront
from .scene import Scene

# columns holding wall-clock measurements (excluded from determinism checks)
TIME_COLUMNS = ("code_ms", "sort_ms", "reorder_ms", "accum_ms", "pretrace_ms", "overhead_ms",
                "trace_ms", "rel_trace_ms")


@dataclass
class BenchRow:
    scene: str
    method: str
    bounce: int
    kind: str
    n_rays: int
    code_ms: float
    sort_ms: float
    reorder_ms: float
    accum_ms: float
    overhead_ms: float
    pretrace_ms: float
    pretrace_node_visits: int
    trace_ms: float
    node_visits: int
    triangle_tests: int
    warp_efficiency: float
    cache_hit_rate: float
    sim_cost: float
    mean_capsule_area: float
    rel_measure: float = 1.0
    rel_sim_cost: float = 1.0
    rel_trace_ms: float = 1.0
    rel_warp_efficiency: float = 1.0
    rel_cache_hit_rate: float = 1.0


FIELDNAMES = [f.name for f in fields(BenchRow)]


class _Acc:
    """Running sums for one (bounce, kind, method) cell across sample passes."""

    def __init__(self):
        self.n = 0
        self.t = dict.fromkeys(PHASES, 0.0)
        self.pretrace = 0.0
        self.pretrace_visits = 0
        self.trace = 0.0
        self.visits = 0
        self.tests = 0
        self.eff_num = 0.0
        self.eff_den = 0.0
        self.hits = 0
        self.accesses = 0
        self.cost = 0.0
        self.area = 0.0
        self.subsets = 0


def _ms(x: float) -> float:
    return round(x, 3)


def _path_lengths(bb: BounceBatch, res: TraceResult) -> np.ndarray:
    """Observed lengths for the adaptive table; inf marks a miss."""
    if bb.kind == RayKind.SHADOW:
        return np.where(res.hit, res.t, bb.rays.tmax)
    return res.t


class SceneBench:
    """Collects per-method metrics for one scene while the render runs."""

    def __init__(self, scene: Scene, cfg: RenderConfig):
        self.scene = scene
        self.cfg = cfg
        est = EstimatorConfig.for_aabb(scene.aabb, cfg.fixed_ratio)
        self.table = table_init(est)
        self.ctx = KeyContext(scene.aabb, cfg.key_bits, est, self.table, scene.bvh)
        self.acc: dict = defaultdict(_Acc)

    def __call__(self, bb: BounceBatch, res: TraceResult) -> None:
        rays = bb.rays
        mode = "any" if bb.kind == RayKind.SHADOW else "closest"
        # traced termination points drive the coherence measure for every method
        terms = terminate_real(rays, self.scene.bvh)
        extent = self.scene.extent
        for method in self.cfg.methods:
            a = self.acc[(bb.bounce, int(bb.kind), method)]
            rep = pipeline(rays, method, self.ctx, self.cfg.plan)
            _, st = trace_batch(self.scene.bvh, rep.rays, mode, self.cfg.warp_size, DEFAULT_CACHE)
            if method is KeyMethod.TWO_POINT_ADAPTIVE and (bb.kind != RayKind.SHADOW
                                                           or self.cfg.accumulate_shadow):
                t0 = time.perf_counter()
                table_accumulate(self.table, rays, _path_lengths(bb, res), self.ctx)
                rep.timings["accum"] = (time.perf_counter() - t0) * 1e3
            if method is KeyMethod.TWO_POINT_REAL:
                # the pre-trace is one full closest-hit trace of the batch
                a.pretrace_visits += int(trace_batch(self.scene.bvh, rays, "closest", instrument=False)[1]
                                         .node_visits.sum())
            for p in PHASES:
                a.t[p] += rep.timings[p]
            a.pretrace += rep.pretrace_ms
            a.n += len(rays)
            a.trace += st.wall_time_ms
            a.visits += int(st.node_visits.sum())
            a.tests += int(st.triangle_tests.sum())
            a.eff_num += st.eff_num
            a.eff_den += st.eff_den
            a.hits += st.cache_hits
            a.accesses += st.cache_accesses
            a.cost += st.sim_cycles
            if len(rays) >= SUBSET_SIZE:
                areas = subset_areas(rays.origins[rep.ordering], terms[rep.ordering], SUBSET_SIZE, extent)
                a.area += float(areas.sum())
                a.subsets += len(areas)

    def rows(self) -> list[BenchRow]:
        out = []
        for (bounce, kind, method), a in sorted(self.acc.items(), key=lambda kv: (kv[0][0], kv[0][1],
                                                                                  list(KeyMethod).index(kv[0][2]))):
            t = {p: _ms(a.t[p]) for p in PHASES}
            out.append(BenchRow(
                scene=self.scene.name, method=method.value, bounce=bounce, kind=RayKind(kind).name.lower(),
                n_rays=a.n, code_ms=t["code"], sort_ms=t["sort"], reorder_ms=t["reorder"], accum_ms=t["accum"],
                overhead_ms=t["code"] + t["sort"] + t["reorder"] + t["accum"],
                pretrace_ms=_ms(a.pretrace), pretrace_node_visits=a.pretrace_visits, trace_ms=_ms(a.trace),
                node_visits=a.visits, triangle_tests=a.tests,
                warp_efficiency=a.eff_num / a.eff_den if a.eff_den else 1.0,
                cache_hit_rate=a.hits / a.accesses if a.accesses else 1.0,
                sim_cost=a.cost,
                mean_capsule_area=a.area / a.subsets if a.subsets else float("nan"),
            ))
        _fill_relative(out)
        return out


def _ratio(x, base):
    return x / base if base else float("nan")


def _fill_relative(rows: list[BenchRow]) -> None:
    base = {(r.scene, r.bounce, r.kind): r for r in rows if r.method == KeyMethod.UNSORTED.value}
    for r in rows:
        b = base.get((r.scene, r.bounce, r.kind))
        if b is None:
            continue
        r.rel_measure = _ratio(r.mean_capsule_area, b.mean_capsule_area)
        r.rel_sim_cost = _ratio(r.sim_cost, b.sim_cost)
        r.rel_trace_ms = _ratio(r.trace_ms, b.trace_ms)
        r.rel_warp_efficiency = _ratio(r.warp_efficiency, b.warp_efficiency)
        r.rel_cache_hit_rate = _ratio(r.cache_hit_rate, b.cache_hit_rate)
        if r is b:
            r.rel_measure = r.rel_sim_cost = r.rel_trace_ms = 1.0
            r.rel_warp_efficiency = r.rel_cache_hit_rate = 1.0


def run_benchmark(cfg: RenderConfig, scenes) -> list[BenchRow]:
    """Render each scene and evaluate every method on every batch.

    Unsorted is always evaluated as the baseline.  The adaptive length table
    persists across bounces and sample passes of a scene.
    """
    scenes = list(scenes)
    if not scenes:
        raise ValueError("need at least one scene")
    methods = list(cfg.methods)
    if KeyMethod.UNSORTED not in methods:
        methods.insert(0, KeyMethod.UNSORTED)
    cfg = RenderConfig(**{**cfg.__dict__, "methods": tuple(methods)})
    rows = []
    for scene in scenes:
        bench = SceneBench(scene, cfg)
        path_trace_wavefront(scene, cfg, on_batch=bench, keep_batches=False)
        rows.extend(bench.rows())
    return rows


def write_csv(rows, path_or_file) -> None:
    def _write(fh):
        w = csv.DictWriter(fh, fieldnames=FIELDNAMES, lineterminator="\r\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in asdict(r).items()})

    if hasattr(path_or_file, "write"):
        _write(path_or_file)
    else:
        with open(path_or_file, "w", newline="") as fh:
            _write(fh)


def read_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def _series(rows, kind, x="rel_measure", y="rel_sim_cost"):
    xs, ys = [], []
    for r in rows:
        if r.kind != kind or r.method == KeyMethod.UNSORTED.value:
            continue
        a, b = getattr(r, x), getattr(r, y)
        if np.isfinite(a) and np.isfinite(b):
            xs.append(a)
            ys.append(b)
    return np.asarray(xs), np.asarray(ys)


def correlate_report(rows, kinds=("secondary", "shadow")) -> dict:
    """Pearson r of relative measure vs relative cost, pooled and per scene.

    Keys are ``(scope, kind, cost)`` with scope ``"all"`` or a scene name and
    cost ``"sim"`` (simulated cycles) or ``"wall"`` (measured trace time).
    """
    rows = list(rows)
    methods = {r.method for r in rows} - {KeyMethod.UNSORTED.value}
    if len(methods) < 2:
        raise ValueError("correlation needs rows for at least two methods besides Unsorted")
    out = {}
    scopes = [("all", rows)] + [(s, [r for r in rows if r.scene == s]) for s in sorted({r.scene for r in rows})]
    for scope, sub in scopes:
        for kind in kinds:
            for cost, col in (("sim", "rel_sim_cost"), ("wall", "rel_trace_ms")):
                xs, ys = _series(sub, kind, y=col)
                if len(xs) < 2:
                    raise ValueError(f"not enough {kind} rows for a correlation")
                out[(scope, kind, cost)] = pearson(xs, ys)
    return out
