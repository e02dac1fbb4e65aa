"""Counter-based random numbers: a pure hash of (seed, pixel, sample, bounce, purpose)."""
from __future__ import annotations

import numpy as np

_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)


def _mix(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def uniform(seed: int, pixel, sample, bounce: int, purpose: int, dims: int = 1) -> np.ndarray:
    """Uniform [0, 1) values, shape (n, dims), fully determined by the counters."""
    pixel = np.asarray(pixel, dtype=np.uint64)
    sample = np.broadcast_to(np.asarray(sample, dtype=np.uint64), pixel.shape)
    with np.errstate(over="ignore"):
        h = _mix(np.uint64(seed) * _GOLDEN + np.uint64(1))
        h = _mix(h ^ (pixel * _GOLDEN))
        h = _mix(h ^ (sample + np.uint64(0x632BE59BD9B4E019)))
        h = _mix(h ^ np.uint64((bounce << 8) | purpose))
        out = np.empty(pixel.shape + (dims,), dtype=np.float64)
        for k in range(dims):
            h = _mix(h + _GOLDEN)
            out[..., k] = (h >> np.uint64(11)).astype(np.float64) * (1.0 / (1 << 53))
    return out
