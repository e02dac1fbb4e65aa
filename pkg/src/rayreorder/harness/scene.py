"""Scenes: OBJ ingestion and a seeded procedural Cornell-style box."""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

from ..geom import Aabb, scene_extent
from ..tracer import Bvh, build_bvh, triangle_areas

DEFAULT_LIGHT_RATIO = 0.05
LIGHT_RADIANCE = 40.0


class ObjParseError(ValueError):
    def __init__(self, msg: str, line: int):
        super().__init__(f"line {line}: {msg}")
        self.line = line


def _face_index(token: str, n_vertices: int, line: int) -> int:
    head = token.split("/")[0]
    try:
        i = int(head)
    except ValueError:
        raise ObjParseError(f"bad face index {token!r}", line) from None
    if i == 0:
        raise ObjParseError("face index 0 is invalid", line)
    j = i - 1 if i > 0 else n_vertices + i
    if not 0 <= j < n_vertices:
        raise ObjParseError(f"face index {i} out of range", line)
    return j


def parse_obj(lines) -> np.ndarray:
    """Triangles (M, 3, 3) from OBJ text lines; polygons become fans."""
    verts: list[list[float]] = []
    tris: list[tuple[int, int, int]] = []
    for lineno, raw in enumerate(lines, start=1):
        parts = raw.split("#", 1)[0].split()
        if not parts:
            continue
        tag = parts[0]
        if tag == "v":
            if len(parts) < 4:
                raise ObjParseError("vertex needs three coordinates", lineno)
            try:
                verts.append([float(x) for x in parts[1:4]])
            except ValueError:
                raise ObjParseError("non-numeric vertex coordinate", lineno) from None
        elif tag == "f":
            if len(parts) < 4:
                raise ObjParseError("face needs at least three vertices", lineno)
            idx = [_face_index(tok, len(verts), lineno) for tok in parts[1:]]
            for k in range(1, len(idx) - 1):
                tris.append((idx[0], idx[k], idx[k + 1]))
    if not tris:
        raise ValueError("OBJ contains no faces")
    tri = np.asarray(verts, dtype=np.float64)[np.asarray(tris)]
    keep = triangle_areas(tri) > 0.0
    if not keep.any():
        raise ValueError("OBJ contains only degenerate faces")
    return tri[keep]


def load_obj(path) -> tuple[np.ndarray, Aabb]:
    """Triangles and bounds of an OBJ file (materials, normals, uvs ignored)."""
    with open(path) as fh:
        tri = parse_obj(fh)
    return tri, Aabb.from_points(tri.reshape(-1, 3))


@dataclass(frozen=True)
class Camera:
    position: np.ndarray
    forward: np.ndarray
    up: np.ndarray
    vfov_deg: float = 60.0

    def basis(self):
        f = self.forward / np.linalg.norm(self.forward)
        r = np.cross(f, self.up)
        r /= np.linalg.norm(r)
        u = np.cross(r, f)
        return f, r, u


@dataclass(frozen=True)
class AreaLight:
    corner: np.ndarray
    edge_u: np.ndarray
    edge_v: np.ndarray
    radiance: float = LIGHT_RADIANCE

    @property
    def normal(self) -> np.ndarray:
        n = np.cross(self.edge_u, self.edge_v)
        return n / np.linalg.norm(n)

    @property
    def area(self) -> float:
        return float(np.linalg.norm(np.cross(self.edge_u, self.edge_v)))

    def triangles(self) -> np.ndarray:
        c, a, b = self.corner, self.edge_u, self.edge_v
        return np.array([[c, c + a, c + a + b], [c, c + a + b, c + b]])


@dataclass
class Scene:
    name: str
    triangles: np.ndarray  # includes the light's two triangles at the end
    emissive: np.ndarray
    light: AreaLight
    camera: Camera

    @cached_property
    def bvh(self) -> Bvh:
        return build_bvh(self.triangles)

    @cached_property
    def aabb(self) -> Aabb:
        return Aabb.from_points(self.triangles.reshape(-1, 3))

    @property
    def extent(self) -> float:
        return scene_extent(self.aabb)

    @cached_property
    def normals(self) -> np.ndarray:
        t = self.triangles
        n = np.cross(t[:, 1] - t[:, 0], t[:, 2] - t[:, 0])
        return n / np.linalg.norm(n, axis=1, keepdims=True)


def ceiling_light(aabb: Aabb, light_ratio: float = DEFAULT_LIGHT_RATIO) -> AreaLight:
    """Square light of side ``light_ratio * extent`` just under the ceiling (+y) center."""
    ext = scene_extent(aabb)
    side = light_ratio * ext
    c = aabb.center.copy()
    c[1] = aabb.max[1] - 1e-3 * ext
    corner = c - np.array([side / 2, 0.0, side / 2])
    # edges ordered so the normal points down (-y)
    return AreaLight(corner, np.array([side, 0.0, 0.0]), np.array([0.0, 0.0, side]))


def default_camera(aabb: Aabb) -> Camera:
    pos = aabb.center.copy()
    pos[2] = aabb.min[2] + 0.02 * scene_extent(aabb)
    return Camera(pos, np.array([0.0, 0.0, 1.0]), np.array([0.0, 1.0, 0.0]))


def scene_from_triangles(name: str, triangles, light_ratio: float = DEFAULT_LIGHT_RATIO) -> Scene:
    tri = np.asarray(triangles, dtype=np.float64).reshape(-1, 3, 3)
    aabb = Aabb.from_points(tri.reshape(-1, 3))
    light = ceiling_light(aabb, light_ratio)
    all_tri = np.concatenate([tri, light.triangles()])
    emissive = np.zeros(len(all_tri), dtype=bool)
    emissive[-2:] = True
    return Scene(name, all_tri, emissive, light, default_camera(aabb))


def _quad(c, a, b):
    return [[c, c + a, c + a + b], [c, c + a + b, c + b]]


def _box(lo, hi):
    lo, hi = np.asarray(lo, float), np.asarray(hi, float)
    dx, dy, dz = np.diag(hi - lo)
    return np.array(
        _quad(lo, dy, dx) + _quad(lo + dz, dx, dy)
        + _quad(lo, dz, dy) + _quad(lo + dx, dy, dz)
        + _quad(lo, dx, dz) + _quad(lo + dy, dz, dx)
    )


def _sphere(center, radius, slices=8, stacks=6):
    th = np.linspace(0, np.pi, stacks + 1)
    ph = np.linspace(0, 2 * np.pi, slices + 1)
    p = np.stack([np.sin(th)[:, None] * np.cos(ph)[None], np.cos(th)[:, None] * np.ones_like(ph)[None],
                  np.sin(th)[:, None] * np.sin(ph)[None]], -1) * radius + center
    tris = []
    for i in range(stacks):
        for j in range(slices):
            a, b, c, d = p[i, j], p[i, j + 1], p[i + 1, j], p[i + 1, j + 1]
            if i > 0:
                tris.append([a, b, d])
            if i < stacks - 1:
                tris.append([a, d, c])
    return np.array(tris)


def gen_procedural_scene(seed: int, complexity: int, light_ratio: float = DEFAULT_LIGHT_RATIO) -> Scene:
    """Closed unit room holding ``complexity`` random boxes and spheres.

    Object ``i`` depends only on ``(seed, i)``, so raising the complexity
    only appends triangles.
    """
    if complexity < 1:
        raise ValueError("complexity must be >= 1")
    parts = [_box([0, 0, 0], [1, 1, 1])]
    for i in range(complexity):
        rng = np.random.default_rng([seed, i])
        size = rng.uniform(0.02, 0.08)
        center = rng.uniform([0.1, 0.0, 0.3], [0.9, 0.85, 0.95])
        center[1] += size
        if rng.random() < 0.5:
            half = size * rng.uniform(0.5, 1.0, 3)
            parts.append(_box(center - half, center + half))
        else:
            parts.append(_sphere(center, size))
    tri = np.concatenate(parts)
    tri = tri[triangle_areas(tri) > 0.0]
    return scene_from_triangles(f"procedural:{complexity}", tri, light_ratio)


def load_scene(spec: str, seed: int = 0, light_ratio: float = DEFAULT_LIGHT_RATIO) -> Scene:
    """``procedural:N`` or a path to an OBJ file."""
    if spec.startswith("procedural:"):
        return gen_procedural_scene(seed, int(spec.split(":", 1)[1]), light_ratio)
    tri, _ = load_obj(spec)
    return scene_from_triangles(Path(spec).stem, tri, light_ratio)
