"""Sorting-key methods.

Each method is a :class:`~rayreorder.encoders.Layout` over quantized ray
components: origin (``ox oy oz``), cube-embedded direction (``dx dy dz``),
octahedral direction (``du dv``) and termination point (``tx ty tz``).
The 64-bit variant of every layout emits the 32-bit group sequence twice,
so a 32-bit key is exactly the top half of the corresponding 64-bit key.
"""
from __future__ import annotations

import enum
import time
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .encoders import ZERO, Layout, cube_encode_direction, octahedron_encode
from .geom import Aabb, as_batch, normalize_point, quantize


class KeyMethod(str, enum.Enum):
    UNSORTED = "Unsorted"
    ORIGIN = "Origin"
    REIS = "Reis"
    COSTA = "Costa"
    AILA = "Aila"
    AILA_COMPACT = "AilaCompact"
    OCTAHEDRON = "Octahedron"
    TWO_POINT_FIXED = "TwoPointFixed"
    TWO_POINT_ADAPTIVE = "TwoPointAdaptive"
    TWO_POINT_REAL = "TwoPointReal"

    @classmethod
    def parse(cls, text: str) -> "KeyMethod":
        norm = text.replace("_", "").replace("-", "").replace(" ", "").lower()
        for m in cls:
            if m.value.lower() == norm:
                return m
        raise ValueError(f"unknown key method {text!r}")

    @property
    def is_two_point(self) -> bool:
        return self in (KeyMethod.TWO_POINT_FIXED, KeyMethod.TWO_POINT_ADAPTIVE, KeyMethod.TWO_POINT_REAL)


def _o(n=1):
    return [("ox", n), ("oy", n), ("oz", n)]


def _d(n=1):
    return [("dx", n), ("dy", n), ("dz", n)]


def _t(n=1):
    return [("tx", n), ("ty", n), ("tz", n)]


_UV = [("du", 1), ("dv", 1)]

# 32-bit layouts, MSB first.
LAYOUTS_32: dict[KeyMethod, Layout] = {
    KeyMethod.ORIGIN: Layout([[("ox", 11), ("oy", 11), ("oz", 10)]]),
    KeyMethod.REIS: Layout([[("ox", 8), ("oy", 7), ("oz", 7)], [("du", 5), ("dv", 5)]]),
    KeyMethod.COSTA: Layout([[("du", 4), ("dv", 4)], [("ox", 8), ("oy", 8), ("oz", 8)]]),
    KeyMethod.AILA: Layout(
        [_o() + [(ZERO, 3)]] * 3 + [_o() + _d()] * 2 + [[("ox", 1), ("oy", 1)]]
    ),
    KeyMethod.AILA_COMPACT: Layout(
        [_o(4)] + [_d(), _o()] * 3 + [[("dx", 1), ("dy", 1)]]
    ),
    KeyMethod.OCTAHEDRON: Layout([_o(5)] + [_UV, _o()] * 3 + [_UV]),
    KeyMethod.TWO_POINT_FIXED: Layout([_o(), _t()] * 5 + [[("ox", 1), ("oy", 1)]]),
}
LAYOUTS_32[KeyMethod.TWO_POINT_ADAPTIVE] = LAYOUTS_32[KeyMethod.TWO_POINT_FIXED]
LAYOUTS_32[KeyMethod.TWO_POINT_REAL] = LAYOUTS_32[KeyMethod.TWO_POINT_FIXED]

LAYOUTS_64: dict[KeyMethod, Layout] = {m: lay.repeated() for m, lay in LAYOUTS_32.items()}


def layout_for(method: KeyMethod, key_bits: int = 32) -> Layout:
    if key_bits not in (32, 64):
        raise ValueError(f"key_bits must be 32 or 64, got {key_bits}")
    if method is KeyMethod.UNSORTED:
        raise ValueError("Unsorted has no key layout")
    return (LAYOUTS_32 if key_bits == 32 else LAYOUTS_64)[method]


@dataclass
class KeyContext:
    """Everything a key method needs besides the rays.

    ``config`` drives the fixed estimator, ``table`` the adaptive one and
    ``bvh`` the real (traced) termination points.
    """

    scene_aabb: Aabb
    key_bits: int = 32
    config: object = None
    table: object = None
    bvh: object = None

    def __post_init__(self):
        if self.key_bits not in (32, 64):
            raise ValueError(f"key_bits must be 32 or 64, got {self.key_bits}")
        if self.config is None:
            from .estimator import EstimatorConfig

            self.config = EstimatorConfig.for_aabb(self.scene_aabb)

    @cached_property
    def key_box(self) -> Aabb:
        return self.scene_aabb.expanded()

    @property
    def dtype(self):
        return np.uint32 if self.key_bits == 32 else np.uint64


def _point_components(points, box: Aabb, prefix: str, layout: Layout) -> dict:
    u = normalize_point(box.clamp(np.asarray(points, dtype=np.float64)), box)
    out = {}
    for axis, name in enumerate((prefix + "x", prefix + "y", prefix + "z")):
        if name in layout.bits:
            out[name] = quantize(u[:, axis], layout.bits[name])
    return out


def _direction_components(directions, layout: Layout) -> dict:
    out = {}
    if "du" in layout.bits:
        uv = octahedron_encode(directions)
        out["du"] = quantize(uv[:, 0], layout.bits["du"])
        out["dv"] = quantize(uv[:, 1], layout.bits["dv"])
    if "dx" in layout.bits:
        for axis, name in enumerate(("dx", "dy", "dz")):
            if name in layout.bits:
                out[name] = cube_encode_direction(directions, layout.bits[name])[:, axis]
    return out


def encode_layout(method: KeyMethod, origins, directions=None, terminations=None,
                  ctx: KeyContext | None = None, key_bits: int | None = None,
                  aabb: Aabb | None = None) -> np.ndarray:
    """Pack already-known ray components with the layout of ``method``."""
    if ctx is not None:
        key_bits, box = ctx.key_bits, ctx.key_box
    else:
        box = aabb.expanded()
    layout = layout_for(method, key_bits or 32)
    values = _point_components(np.reshape(origins, (-1, 3)), box, "o", layout)
    if directions is not None:
        values.update(_direction_components(np.reshape(directions, (-1, 3)), layout))
    if terminations is not None:
        values.update(_point_components(np.reshape(terminations, (-1, 3)), box, "t", layout))
    dtype = np.uint32 if (key_bits or 32) == 32 else np.uint64
    return layout.pack(values).astype(dtype)


def _simple_key(method):
    def key_fn(rays, ctx: KeyContext) -> np.ndarray:
        b = as_batch(rays)
        return encode_layout(method, b.origins, b.directions, ctx=ctx)

    key_fn.__name__ = f"key_{method.name.lower()}"
    return key_fn


key_origin = _simple_key(KeyMethod.ORIGIN)
key_reis = _simple_key(KeyMethod.REIS)
key_costa = _simple_key(KeyMethod.COSTA)
key_aila = _simple_key(KeyMethod.AILA)
key_aila_compact = _simple_key(KeyMethod.AILA_COMPACT)
key_octahedron = _simple_key(KeyMethod.OCTAHEDRON)
key_origin.__doc__ = "Origin-only Morton key (x:11 y:11 z:10 in 32-bit mode)."
key_aila_compact.__doc__ = "Aila key without the zero prefix: 12 pure origin bits, then d/o groups."


def key_two_point(rays, terminations, ctx: KeyContext) -> np.ndarray:
    """Interleave origin and termination cells; origin gets the extra bits."""
    b = as_batch(rays)
    return encode_layout(KeyMethod.TWO_POINT_FIXED, b.origins, terminations=terminations, ctx=ctx)


_SIMPLE = {
    KeyMethod.ORIGIN: key_origin,
    KeyMethod.REIS: key_reis,
    KeyMethod.COSTA: key_costa,
    KeyMethod.AILA: key_aila,
    KeyMethod.AILA_COMPACT: key_aila_compact,
    KeyMethod.OCTAHEDRON: key_octahedron,
}


def compute_keys(rays, method: KeyMethod, ctx: KeyContext, timings: dict | None = None) -> np.ndarray:
    """Keys for a whole batch.

    If ``timings`` is given it receives ``code`` (total key time, ms) and
    ``pretrace`` (the part spent tracing for TwoPointReal, ms).
    """
    from . import estimator

    method = KeyMethod(method)
    batch = as_batch(rays)
    start = time.perf_counter()
    pretrace = 0.0
    if method is KeyMethod.UNSORTED:
        keys = np.arange(len(batch), dtype=ctx.dtype)
    elif method in _SIMPLE:
        keys = _SIMPLE[method](batch, ctx)
    elif method is KeyMethod.TWO_POINT_FIXED:
        keys = key_two_point(batch, estimator.estimate_fixed(batch, ctx.config), ctx)
    elif method is KeyMethod.TWO_POINT_ADAPTIVE:
        if ctx.table is None:
            raise ValueError("TwoPointAdaptive needs a length hash table in the context")
        keys = key_two_point(batch, estimator.estimate_adaptive(ctx.table, batch, ctx), ctx)
    else:
        if ctx.bvh is None:
            raise ValueError("TwoPointReal needs a tracer (bvh) in the context")
        t0 = time.perf_counter()
        term = estimator.terminate_real(batch, ctx.bvh)
        pretrace = (time.perf_counter() - t0) * 1e3
        keys = key_two_point(batch, term, ctx)
    if timings is not None:
        timings["code"] = (time.perf_counter() - start) * 1e3
        timings["pretrace"] = pretrace
    return keys
