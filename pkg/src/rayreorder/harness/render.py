"""Wavefront path tracer producing per-bounce ray batches.

Lambertian surfaces only; next event estimation casts two shadow rays per
hit towards the area light.  Every random decision is a hash of
(pixel, sample, bounce, purpose), so the image does not depend on the order
in which rays are traced.
"""
from __future__ import annotations

from collections.abc import Callable, Sequence
from dataclasses import dataclass, field

import numpy as np

from ..geom import RayBatch, RayKind
from ..keys import KeyContext, KeyMethod
from ..sortreorder import SortPlan, pipeline, scatter
from ..tracer import TraceResult, trace_batch
from . import rng
from .scene import Scene

ALBEDO = 0.7
SHADOW_RAYS = 2
# rng purposes
_CAMERA, _LIGHT0, _SCATTER, _ROULETTE = 0, 1, 3, 4


@dataclass
class RenderConfig:
    width: int = 256
    height: int = 256
    samples_per_pixel: int = 8
    max_bounces: int = 8
    light_ratio: float = 0.05
    seed: int = 0
    warp_size: int = 64
    methods: Sequence[KeyMethod] = tuple(KeyMethod)
    plan: SortPlan = field(default_factory=SortPlan)
    fixed_ratio: float = 0.25
    accumulate_shadow: bool = True  # shadow-ray lengths feed the shared adaptive table

    def __post_init__(self):
        for name in ("width", "height", "samples_per_pixel"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.max_bounces < 0:
            raise ValueError("max_bounces must be >= 0")
        if not self.methods:
            raise ValueError("method list must not be empty")
        if self.warp_size not in (32, 64):
            raise ValueError("warp_size must be 32 or 64")
        self.methods = tuple(KeyMethod(m) for m in self.methods)

    @property
    def key_bits(self) -> int:
        return self.plan.key_bits


@dataclass
class BounceBatch:
    bounce: int
    kind: RayKind
    rays: RayBatch
    live: np.ndarray  # path rays: hit a non-emissive surface; shadow rays: unoccluded


@dataclass
class RenderResult:
    batches: list
    image: np.ndarray  # (height, width), mean radiance per pixel


def primary_rays(scene: Scene, cfg: RenderConfig) -> RayBatch:
    """Camera rays for every (sample, pixel), sample-major."""
    w, h, spp = cfg.width, cfg.height, cfg.samples_per_pixel
    n_pix = w * h
    pixel = np.tile(np.arange(n_pix, dtype=np.int64), spp)
    sample = np.repeat(np.arange(spp, dtype=np.int64), n_pix)
    jitter = rng.uniform(cfg.seed, pixel, sample, 0, _CAMERA, 2)
    px = (pixel % w + jitter[:, 0]) / w * 2.0 - 1.0
    py = 1.0 - (pixel // w + jitter[:, 1]) / h * 2.0
    f, r, u = scene.camera.basis()
    tan = np.tan(np.radians(scene.camera.vfov_deg) / 2)
    d = f[None] + (px * tan * w / h)[:, None] * r[None] + (py * tan)[:, None] * u[None]
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    o = np.broadcast_to(scene.camera.position, d.shape)
    batch = RayBatch(o, d, np.inf, int(RayKind.PRIMARY), pixel, sample)
    batch.extra["throughput"] = np.ones(len(pixel))
    return batch


def _cosine_hemisphere(n: np.ndarray, xi: np.ndarray) -> np.ndarray:
    r = np.sqrt(xi[:, 0])
    phi = 2 * np.pi * xi[:, 1]
    a = np.where(np.abs(n[:, [0]]) > 0.9, [[0.0, 1.0, 0.0]], [[1.0, 0.0, 0.0]])
    t = np.cross(n, a)
    t /= np.linalg.norm(t, axis=1, keepdims=True)
    b = np.cross(n, t)
    z = np.sqrt(np.maximum(0.0, 1.0 - xi[:, 0]))
    d = t * (r * np.cos(phi))[:, None] + b * (r * np.sin(phi))[:, None] + n * z[:, None]
    return d / np.linalg.norm(d, axis=1, keepdims=True)


TraceFn = Callable[[RayBatch, str], TraceResult]


def plain_trace(scene: Scene, warp_size: int = 64) -> TraceFn:
    def fn(rays: RayBatch, mode: str) -> TraceResult:
        return trace_batch(scene.bvh, rays, mode, warp_size, instrument=False)[0]

    return fn


def reordering_trace(scene: Scene, method: KeyMethod, ctx: KeyContext, plan: SortPlan = SortPlan(),
                     warp_size: int = 64) -> TraceFn:
    """Trace each batch in the order produced by ``method``, results scattered back."""

    def fn(rays: RayBatch, mode: str) -> TraceResult:
        rep = pipeline(rays, method, ctx, plan)
        res = trace_batch(scene.bvh, rep.rays, mode, warp_size, instrument=False)[0]
        return TraceResult(scatter(res.hit, rep.inverse), scatter(res.t, rep.inverse),
                           scatter(res.triangle, rep.inverse))

    return fn


def path_trace_wavefront(scene: Scene, cfg: RenderConfig, trace: TraceFn | None = None,
                         on_batch: Callable[[BounceBatch, TraceResult], None] | None = None,
                         keep_batches: bool = True) -> RenderResult:
    """Render with one wavefront holding every sample of every pixel.

    ``trace`` may reorder rays internally but must return results in the
    batch's order.  ``on_batch`` sees every batch right after its trace.
    """
    trace = trace or plain_trace(scene, cfg.warp_size)
    n_pix = cfg.width * cfg.height
    accum = np.zeros(n_pix)
    batches: list[BounceBatch] = []
    light = scene.light
    eps = 1e-4 * scene.extent

    def emit(bb: BounceBatch, res: TraceResult):
        if keep_batches:
            batches.append(bb)
        if on_batch is not None:
            on_batch(bb, res)

    rays = primary_rays(scene, cfg)
    for bounce in range(cfg.max_bounces + 1):
        if len(rays) == 0:
            break
        res = trace(rays, "closest")
        tri = np.maximum(res.triangle, 0)
        emissive_hit = res.hit & scene.emissive[tri]
        live = res.hit & ~emissive_hit
        kind = RayKind.PRIMARY if bounce == 0 else RayKind.SECONDARY
        emit(BounceBatch(bounce, kind, rays, live), res)
        thr = rays.extra["throughput"]
        if bounce == 0:
            accum += np.bincount(rays.pixel[emissive_hit], thr[emissive_hit] * light.radiance,
                                 minlength=n_pix)
        if bounce == cfg.max_bounces:
            break

        cont = rays.take(np.flatnonzero(live))
        p = cont.origins + cont.directions * res.t[live][:, None]
        n = scene.normals[res.triangle[live]]
        n = np.where((np.sum(n * cont.directions, axis=1) > 0)[:, None], -n, n)
        thr = cont.extra["throughput"]

        # next event estimation: two shadow rays per live hit
        m = len(cont)
        pix = np.repeat(cont.pixel, SHADOW_RAYS)
        smp = np.repeat(cont.sample, SHADOW_RAYS)
        xi = np.empty((m * SHADOW_RAYS, 2))
        for k in range(SHADOW_RAYS):
            xi[k::SHADOW_RAYS] = rng.uniform(cfg.seed, cont.pixel, cont.sample, bounce, _LIGHT0 + k, 2)
        lp = light.corner + xi[:, [0]] * light.edge_u + xi[:, [1]] * light.edge_v
        sp = np.repeat(p, SHADOW_RAYS, axis=0)
        to_l = lp - sp
        dist = np.linalg.norm(to_l, axis=1)
        sd = to_l / dist[:, None]
        shadow = RayBatch(sp, sd, np.maximum(dist - eps, 0.5 * dist), int(RayKind.SHADOW), pix, smp)
        sres = trace(shadow, "any")
        emit(BounceBatch(bounce, RayKind.SHADOW, shadow, ~sres.hit), sres)
        cos_x = np.maximum(0.0, np.sum(np.repeat(n, SHADOW_RAYS, axis=0) * sd, axis=1))
        cos_l = np.maximum(0.0, -(sd @ light.normal))
        contrib = (np.repeat(thr, SHADOW_RAYS) * (ALBEDO / np.pi) * light.radiance * cos_x * cos_l
                   * light.area / dist**2 / SHADOW_RAYS)
        contrib = np.where(sres.hit, 0.0, contrib)
        accum += np.bincount(pix, contrib, minlength=n_pix)

        # absorption (survival probability = albedo keeps throughput unchanged), then scatter
        survive = rng.uniform(cfg.seed, cont.pixel, cont.sample, bounce, _ROULETTE, 1)[:, 0] < ALBEDO
        keep = np.flatnonzero(survive)
        xi = rng.uniform(cfg.seed, cont.pixel[keep], cont.sample[keep], bounce, _SCATTER, 2)
        nd = _cosine_hemisphere(n[keep], xi)
        rays = RayBatch(p[keep], nd, np.inf, int(RayKind.SECONDARY), cont.pixel[keep], cont.sample[keep])
        rays.extra["throughput"] = thr[keep]
    image = (accum / cfg.samples_per_pixel).reshape(cfg.height, cfg.width)
    return RenderResult(batches, image)
