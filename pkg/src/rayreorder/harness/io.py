"""Binary ray dumps and PPM images."""
from __future__ import annotations

import numpy as np

from ..geom import RayBatch

RAY_MAGIC = b"RAYS"
RAY_RECORD = np.dtype([("origin", "<f4", 3), ("direction", "<f4", 3), ("tmax", "<f4"), ("kind", "<u4")])


def write_rays(path, rays: RayBatch) -> None:
    rec = np.empty(len(rays), RAY_RECORD)
    rec["origin"] = rays.origins
    rec["direction"] = rays.directions
    rec["tmax"] = rays.tmax
    rec["kind"] = rays.kind
    with open(path, "wb") as fh:
        fh.write(RAY_MAGIC)
        fh.write(np.uint32(len(rays)).astype("<u4").tobytes())
        fh.write(rec.tobytes())


def read_rays(path) -> RayBatch:
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:4] != RAY_MAGIC:
        raise ValueError(f"{path}: not a ray dump (bad magic)")
    if len(data) < 8:
        raise ValueError(f"{path}: truncated header")
    n = int(np.frombuffer(data, "<u4", 1, 4)[0])
    body = data[8:]
    if len(body) != n * RAY_RECORD.itemsize:
        raise ValueError(f"{path}: expected {n} rays, found {len(body)} payload bytes")
    rec = np.frombuffer(body, RAY_RECORD, n)
    d = rec["direction"].astype(np.float64)
    # f32 storage loses a little length; renormalize so the batch stays valid
    norms = np.linalg.norm(d, axis=1, keepdims=True)
    d = np.divide(d, norms, out=d, where=norms > 0)
    return RayBatch(rec["origin"].astype(np.float64), d, rec["tmax"].astype(np.float64),
                    rec["kind"].astype(np.uint8))


def tone_map(image, exposure: float = 1.0, gamma: float = 2.2) -> np.ndarray:
    """Clamp to [0, 1], apply display gamma, quantize to 8 bits."""
    x = np.clip(np.asarray(image, np.float64) * exposure, 0.0, 1.0)
    return np.round(x ** (1.0 / gamma) * 255.0).astype(np.uint8)


def write_ppm(path, image, exposure: float = 1.0) -> None:
    """Binary P6 PPM; a 2-D array is written as gray."""
    img = tone_map(image, exposure)
    if img.ndim == 2:
        img = np.repeat(img[:, :, None], 3, axis=2)
    h, w, _ = img.shape
    with open(path, "wb") as fh:
        fh.write(f"P6\n{w} {h}\n255\n".encode("ascii"))
        fh.write(np.ascontiguousarray(img).tobytes())


def read_ppm(path) -> np.ndarray:
    with open(path, "rb") as fh:
        data = fh.read()
    parts = data.split(maxsplit=4)
    if parts[0] != b"P6":
        raise ValueError(f"{path}: not a binary PPM")
    w, h, maxval = int(parts[1]), int(parts[2]), int(parts[3])
    if maxval != 255:
        raise ValueError("only 8-bit PPM is supported")
    pix = np.frombuffer(parts[4], np.uint8, w * h * 3)
    return pix.reshape(h, w, 3)
