import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rayreorder.geom import Aabb, Ray, RayBatch, as_batch, normalize_point, quantize, scene_extent


@pytest.mark.parametrize("lo,hi,ext", [((0, 0, 0), (1, 2, 3), 3.0), ((0, 0, 0), (1, 1, 1), 1.0),
                                       ((-1, -1, -1), (1, 1, 1), 2.0)])
def test_scene_extent(lo, hi, ext):
    assert scene_extent(Aabb(lo, hi)) == ext


def test_scene_extent_degenerate():
    with pytest.raises(ValueError):
        scene_extent(Aabb((1, 1, 1), (1, 1, 1)))


def test_aabb_rejects_inverted_and_nonfinite():
    with pytest.raises(ValueError):
        Aabb((1, 0, 0), (0, 1, 1))
    with pytest.raises(ValueError):
        Aabb((0, 0, 0), (np.inf, 1, 1))


def test_normalize_point_examples():
    box = Aabb((0, 0, 0), (2, 4, 8))
    assert normalize_point(box.min, box).tolist() == [0, 0, 0]
    assert normalize_point(box.center, box).tolist() == [0.5, 0.5, 0.5]
    out = normalize_point((5, 1, 1), box)
    assert out[0] == np.nextafter(1.0, 0.0)


@pytest.mark.parametrize("u,bits,q", [(0.5, 4, 8), (0.0, 8, 0), (0.999999, 3, 7), (1.0, 3, 7), (-0.2, 5, 0)])
def test_quantize_examples(u, bits, q):
    assert quantize(u, bits) == q


@pytest.mark.parametrize("bits", [0, 33, -1, 2.5])
def test_quantize_bits_range(bits):
    with pytest.raises(ValueError):
        quantize(0.5, bits)


@given(st.floats(0, 1), st.floats(0, 1), st.integers(1, 32))
def test_quantize_monotone(a, b, bits):
    lo, hi = sorted((a, b))
    assert quantize(lo, bits) <= quantize(hi, bits)


@given(st.lists(st.floats(-1e3, 1e3), min_size=3, max_size=3))
def test_normalize_in_unit_interval(p):
    box = Aabb((-10, -5, 0), (10, 5, 1))
    u = normalize_point(p, box)
    assert np.all(u >= 0) and np.all(u < 1)


@given(st.integers(0, 1023), st.floats(0, 1, exclude_max=True), st.floats(0, 1, exclude_max=True))
def test_same_cell_same_quantization(cell, f1, f2):
    box = Aabb((0, 0, 0), (1, 1, 1))
    p1 = np.full(3, (cell + f1) / 1024)
    p2 = np.full(3, (cell + f2) / 1024)
    q1 = quantize(normalize_point(p1, box), 10)
    q2 = quantize(normalize_point(p2, box), 10)
    # floats near a cell border can round into the neighbour; only check interior points
    if 1e-9 < f1 < 1 - 1e-9 and 1e-9 < f2 < 1 - 1e-9:
        assert np.array_equal(q1, q2)


def test_expanded_box_pads_every_side():
    box = Aabb((0, 0, 0), (2, 1, 1)).expanded(1e-4)
    assert np.allclose(box.min, -2e-4) and np.allclose(box.max, [2 + 2e-4, 1 + 2e-4, 1 + 2e-4])


def test_ray_batch_validation_and_take():
    b = RayBatch(np.zeros((3, 3)), [[1, 0, 0], [0, 1, 0], [0, 0, 1]], np.inf, 0, np.arange(3), np.zeros(3, int))
    b.validate()
    sub = b.take([2, 0])
    assert sub.directions.tolist() == [[0, 0, 1], [1, 0, 0]] and sub.pixel.tolist() == [2, 0]
    with pytest.raises(ValueError):
        RayBatch(np.zeros((1, 3)), [[2, 0, 0]], 1.0, 0).validate()
    with pytest.raises(ValueError):
        RayBatch(np.zeros((1, 3)), [[1, 0, 0]], 0.0, 0).validate()
    with pytest.raises(ValueError):
        RayBatch(np.zeros((2, 3)), np.zeros((1, 3)), 1.0, 0)


def test_as_batch_single_ray():
    b = as_batch(Ray(np.zeros(3), np.array([0.0, 0.0, 1.0]), 5.0))
    assert len(b) == 1 and b.tmax[0] == 5.0
    with pytest.raises(TypeError):
        as_batch("ray")
