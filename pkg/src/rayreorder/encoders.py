"""Bit interleaving and direction parametrizations.

All key layouts are described as a sequence of *groups*.  Inside a group the
listed components emit their next most significant bit in turn (round robin)
until each has emitted its count; components that run out are skipped.
Across groups every component keeps consuming its own bits MSB-first, so a
component split over several groups is written from its high to its low
bits.  The special component name ``"0"`` emits a constant zero bit.
"""
from __future__ import annotations

from collections.abc import Mapping, Sequence
from dataclasses import dataclass

import numpy as np

from .geom import quantize

ZERO = "0"
MAX_KEY_BITS = 64


def sign_not_zero(x):
    """sign() with sign(0) = +1 (also for -0.0)."""
    return np.where(np.asarray(x) >= 0.0, 1.0, -1.0)


def _round_robin(counts: Sequence[int]) -> list[int]:
    order = []
    left = list(counts)
    while any(left):
        for i, c in enumerate(left):
            if c:
                order.append(i)
                left[i] -= 1
    return order


class Layout:
    """A bit layout for an unsigned key built from named components.

    >>> lay = Layout([[("x", 2), ("y", 1)]])
    >>> lay.width, lay.pattern()
    (3, 'xyx')
    """

    def __init__(self, groups: Sequence[Sequence[tuple[str, int]]]):
        self.groups = tuple(tuple((str(n), int(c)) for n, c in g) for g in groups)
        totals: dict[str, int] = {}
        for group in self.groups:
            for name, count in group:
                if count < 0:
                    raise ValueError("negative bit count")
                if name != ZERO:
                    totals[name] = totals.get(name, 0) + count
        self.bits = totals
        width = sum(c for g in self.groups for _, c in g)
        if width > MAX_KEY_BITS:
            raise ValueError(f"layout needs {width} bits, more than {MAX_KEY_BITS}")
        self.width = width

        # slots[k] = (name, shift) for key bit (width - 1 - k)
        used = {name: 0 for name in totals}
        slots = []
        for group in self.groups:
            names = [n for n, _ in group]
            for i in _round_robin([c for _, c in group]):
                name = names[i]
                if name == ZERO:
                    slots.append((ZERO, -1))
                else:
                    used[name] += 1
                    slots.append((name, totals[name] - used[name]))
        self.slots = tuple(slots)

    def __repr__(self) -> str:
        return f"Layout({self.pattern()!r})"

    def pattern(self) -> str:
        """One character per key bit, MSB first (first letter of the component)."""
        return "".join(name[0] for name, _ in self.slots)

    def repeated(self) -> "Layout":
        """The same group sequence emitted twice, doubling every component width.

        The top ``width`` bits of the repeated layout equal this layout's key
        when components are quantized at the doubled resolution.
        """
        return Layout(self.groups + self.groups)

    def mask(self, *names: str) -> int:
        """Integer with a 1 at every key position fed by one of ``names``."""
        m = 0
        for k, (name, _) in enumerate(self.slots):
            if name in names:
                m |= 1 << (self.width - 1 - k)
        return m

    def pack(self, values: Mapping[str, object]) -> np.ndarray:
        arrays = {}
        for name, bits in self.bits.items():
            if name not in values:
                raise KeyError(f"missing component {name!r}")
            v = np.asarray(values[name], dtype=np.uint64)
            if bits < 64 and np.any(v >> np.uint64(bits)):
                raise ValueError(f"component {name!r} does not fit in {bits} bits")
            arrays[name] = v
        shape = np.broadcast_shapes(*(a.shape for a in arrays.values())) if arrays else ()
        key = np.zeros(shape, dtype=np.uint64)
        one = np.uint64(1)
        for k, (name, shift) in enumerate(self.slots):
            if name == ZERO:
                continue
            pos = np.uint64(self.width - 1 - k)
            key |= ((arrays[name] >> np.uint64(shift)) & one) << pos
        return key

    def unpack(self, key) -> dict[str, np.ndarray]:
        key = np.asarray(key, dtype=np.uint64)
        if self.width < 64 and np.any(key >> np.uint64(self.width)):
            raise ValueError(f"key wider than layout width {self.width}")
        out = {name: np.zeros(key.shape, dtype=np.uint64) for name in self.bits}
        one = np.uint64(1)
        for k, (name, shift) in enumerate(self.slots):
            if name == ZERO:
                continue
            bit = (key >> np.uint64(self.width - 1 - k)) & one
            out[name] |= bit << np.uint64(shift)
        return out


@dataclass(frozen=True)
class ComponentSpec:
    """Component values (scalars or equal-shape arrays) with per-slot widths."""

    values: tuple
    bits: tuple

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(self.values))
        object.__setattr__(self, "bits", tuple(int(b) for b in self.bits))
        if len(self.values) != len(self.bits):
            raise ValueError("values and bits differ in length")

    def layout(self) -> Layout:
        return _spec_layout(self.bits)


def _names(n: int) -> list[str]:
    return [f"c{i}" for i in range(n)]


def _spec_layout(bits: Sequence[int]) -> Layout:
    return Layout([list(zip(_names(len(bits)), bits))])


def interleave_round_robin(spec: ComponentSpec) -> tuple:
    """Morton-style interleave of ``spec``; returns ``(key, width)``.

    >>> interleave_round_robin(ComponentSpec((0b10, 0b1), (2, 1)))
    (6, 3)
    """
    layout = spec.layout()
    key = layout.pack(dict(zip(_names(len(spec.bits)), spec.values)))
    return (int(key) if key.ndim == 0 else key), layout.width


def deinterleave(key, bits: Sequence[int]) -> tuple:
    """Inverse of :func:`interleave_round_robin` for the given per-component widths."""
    layout = _spec_layout(bits)
    parts = layout.unpack(key)
    vals = [parts[n] for n in _names(len(bits))]
    return tuple(int(v) if v.ndim == 0 else v for v in vals)


def _check_unit(d: np.ndarray, atol: float = 1e-6) -> None:
    if np.any(np.abs(np.linalg.norm(d, axis=-1) - 1.0) > atol):
        raise ValueError("direction must be unit length")


def cube_encode_direction(d, bits_per_axis: int) -> np.ndarray:
    """Quantize each direction component after mapping [-1, 1] to [0, 1]."""
    d = np.asarray(d, dtype=np.float64)
    _check_unit(d)
    return quantize((d + 1.0) * 0.5, bits_per_axis)


def octahedron_encode(d) -> np.ndarray:
    """Octahedral map of directions to the unit square, shape (..., 2)."""
    d = np.asarray(d, dtype=np.float64)
    l1 = np.abs(d).sum(axis=-1, keepdims=True)
    if np.any(l1 == 0.0):
        raise ValueError("cannot encode a zero direction")
    p = d / l1
    px, py, pz = p[..., 0], p[..., 1], p[..., 2]
    fold = pz < 0.0
    u = np.where(fold, (1.0 - np.abs(py)) * sign_not_zero(px), px)
    v = np.where(fold, (1.0 - np.abs(px)) * sign_not_zero(py), py)
    return np.stack([u * 0.5 + 0.5, v * 0.5 + 0.5], axis=-1)


def octahedron_decode(uv) -> np.ndarray:
    uv = np.asarray(uv, dtype=np.float64)
    x = uv[..., 0] * 2.0 - 1.0
    y = uv[..., 1] * 2.0 - 1.0
    z = 1.0 - np.abs(x) - np.abs(y)
    fold = z < 0.0
    xf = np.where(fold, (1.0 - np.abs(y)) * sign_not_zero(x), x)
    yf = np.where(fold, (1.0 - np.abs(x)) * sign_not_zero(y), y)
    out = np.stack([xf, yf, z], axis=-1)
    return out / np.linalg.norm(out, axis=-1, keepdims=True)


def octahedron_quantize(d, bits: int) -> np.ndarray:
    """Octahedral cell indices (..., 2) at ``bits`` per axis."""
    return quantize(octahedron_encode(d), bits)
