"""Command line entry points: bench, render, keys, sortbench."""
from __future__ import annotations

import argparse
import csv
import sys
import time

import numpy as np

from .geom import Aabb, RayBatch, RayKind
from .keys import KeyContext, KeyMethod, compute_keys
from .sortreorder import SEGMENT_SIZES, SortPlan, gather_reorder, segmented_sort_pairs


def _methods(text: str) -> tuple:
    if text.strip().lower() == "all":
        return tuple(KeyMethod)
    return tuple(KeyMethod.parse(t) for t in text.split(",") if t.strip())


def _render_args(p: argparse.ArgumentParser, scene_repeat: bool) -> None:
    if scene_repeat:
        p.add_argument("--scene", action="append", help="OBJ path or procedural:N (repeatable)")
    else:
        p.add_argument("--scene", default="procedural:200", help="OBJ path or procedural:N")
    p.add_argument("--spp", type=int, default=8)
    p.add_argument("--bounces", type=int, default=8)
    p.add_argument("--width", type=int, default=256)
    p.add_argument("--height", type=int, default=256)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--warp", type=int, choices=(32, 64), default=64)
    p.add_argument("--key-bits", type=int, choices=(32, 64), default=32)
    p.add_argument("--segment", type=int, choices=SEGMENT_SIZES, default=0)


def _config(args, methods):
    from .harness.render import RenderConfig

    return RenderConfig(width=args.width, height=args.height, samples_per_pixel=args.spp,
                        max_bounces=args.bounces, seed=args.seed, warp_size=args.warp, methods=methods,
                        plan=SortPlan(args.segment, args.key_bits))


def cmd_bench(args) -> int:
    from .harness.bench import correlate_report, run_benchmark, write_csv
    from .harness.scene import load_scene

    cfg = _config(args, _methods(args.methods))
    scenes = [load_scene(s, args.seed) for s in (args.scene or ["procedural:200"])]
    rows = run_benchmark(cfg, scenes)
    if args.out:
        write_csv(rows, args.out)
    else:
        write_csv(rows, sys.stdout)
    try:
        report = correlate_report(rows)
    except ValueError as exc:
        print(f"correlation: {exc}", file=sys.stderr)
    else:
        for (scope, kind, cost), r in report.items():
            print(f"pearson {scope} {kind} {cost}: {r:.4f}", file=sys.stderr)
    return 0


def cmd_render(args) -> int:
    from .harness.io import write_ppm
    from .harness.render import path_trace_wavefront, reordering_trace
    from .harness.scene import load_scene

    scene = load_scene(args.scene, args.seed)
    method = KeyMethod.parse(args.method)
    cfg = _config(args, (method,))
    trace = None
    if method is not KeyMethod.UNSORTED:
        from .estimator import EstimatorConfig, table_init

        est = EstimatorConfig.for_aabb(scene.aabb)
        ctx = KeyContext(scene.aabb, cfg.key_bits, est, table_init(est), scene.bvh)
        trace = reordering_trace(scene, method, ctx, cfg.plan, cfg.warp_size)
    res = path_trace_wavefront(scene, cfg, trace, keep_batches=False)
    write_ppm(args.out, res.image, args.exposure)
    print(f"wrote {args.out} ({cfg.width}x{cfg.height}, mean {res.image.mean():.4g})", file=sys.stderr)
    return 0


def cmd_keys(args) -> int:
    from .estimator import EstimatorConfig, table_init
    from .harness.io import read_rays

    rays = read_rays(args.rays)
    method = KeyMethod.parse(args.method)
    bvh = None
    if args.scene:
        from .harness.scene import load_scene

        scene = load_scene(args.scene, args.seed)
        aabb, bvh = scene.aabb, scene.bvh
    elif len(rays):
        aabb = Aabb.from_points(rays.origins)
    else:
        aabb = Aabb(np.zeros(3), np.ones(3))
    if np.max(aabb.extent) == 0:
        aabb = Aabb(aabb.min - 0.5, aabb.max + 0.5)
    est = EstimatorConfig.for_aabb(aabb)
    ctx = KeyContext(aabb, args.key_bits, est, table_init(est), bvh)
    keys = compute_keys(rays, method, ctx)
    width = args.key_bits // 4
    out = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        w = csv.writer(out, lineterminator="\r\n")
        w.writerow(["index", "key"])
        for i, k in enumerate(keys.tolist()):
            w.writerow([i, f"{k:0{width}x}"])
    finally:
        if args.out:
            out.close()
    return 0


def _random_rays(n: int, seed: int) -> RayBatch:
    rng = np.random.default_rng(seed)
    d = rng.normal(size=(n, 3))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    return RayBatch(rng.random((n, 3)), d, np.inf, int(RayKind.SECONDARY))


def cmd_sortbench(args) -> int:
    rays = _random_rays(args.n, args.seed)
    ctx = KeyContext(Aabb(np.zeros(3), np.ones(3)), args.key_bits)
    method = KeyMethod.parse(args.method)
    plan = SortPlan(args.segment, args.key_bits)
    # warm-up compiles the kernels so the timed run measures steady state
    warm = _random_rays(max(4096, 2 * args.segment + 1), args.seed)
    segmented_sort_pairs(compute_keys(warm, method, ctx), None, plan)
    t = {}
    keys = compute_keys(rays, method, ctx, t)
    t0 = time.perf_counter()
    _, order = segmented_sort_pairs(keys, None, plan)
    sort_ms = (time.perf_counter() - t0) * 1e3
    t0 = time.perf_counter()
    gather_reorder(rays, order)
    reorder_ms = (time.perf_counter() - t0) * 1e3
    mkeys = args.n / (sort_ms * 1e3) if sort_ms > 0 else float("inf")
    w = csv.writer(sys.stdout, lineterminator="\r\n")
    w.writerow(["n", "key_bits", "segment", "method", "code_ms", "sort_ms", "reorder_ms", "mkeys_per_s"])
    w.writerow([args.n, args.key_bits, args.segment, method.value, f"{t['code']:.3f}", f"{sort_ms:.3f}",
                f"{reorder_ms:.3f}", f"{mkeys:.2f}"])
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="rayreorder", description="Ray reordering benchmarks.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bench", help="benchmark every method on rendered batches, CSV out")
    _render_args(p, scene_repeat=True)
    p.add_argument("--methods", default="all", help="comma-separated method names or 'all'")
    p.add_argument("--out", help="CSV path (default: stdout)")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("render", help="render a scene to a binary PPM")
    _render_args(p, scene_repeat=False)
    p.add_argument("--method", default="Unsorted", help="reordering used while rendering")
    p.add_argument("--exposure", type=float, default=1.0)
    p.add_argument("--out", default="render.ppm")
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("keys", help="dump sort keys of a ray file as CSV")
    p.add_argument("rays", help="ray dump file")
    p.add_argument("--method", default="AilaCompact")
    p.add_argument("--key-bits", type=int, choices=(32, 64), default=32)
    p.add_argument("--scene", help="scene giving the key bounds (default: bounds of the ray origins)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="CSV path (default: stdout)")
    p.set_defaults(func=cmd_keys)

    p = sub.add_parser("sortbench", help="time key generation, sorting and reordering")
    p.add_argument("--n", type=int, default=1 << 20)
    p.add_argument("--key-bits", type=int, choices=(32, 64), default=32)
    p.add_argument("--segment", type=int, choices=SEGMENT_SIZES, default=0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--method", default="AilaCompact")
    p.set_defaults(func=cmd_sortbench)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"rayreorder: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
