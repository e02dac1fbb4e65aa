# %% [markdown]
# # Sort keys, bit by bit
#
# Every reordering method turns a ray into an unsigned integer key.  The
# layout decides which part of the ray (origin, direction, termination point)
# lands in which key bits; the most significant bits dominate the final order.

# %%
import numpy as np

from rayreorder import Aabb, KeyContext, KeyMethod, RayBatch, compute_keys, layout_for

for m in KeyMethod:
    if m is KeyMethod.UNSORTED or m in (KeyMethod.TWO_POINT_ADAPTIVE, KeyMethod.TWO_POINT_REAL):
        continue
    print(f"{m.value:>14}  {layout_for(m).pattern()}")

# %% [markdown]
# Read `o` as origin, `d` as direction, `t` as termination and `0` as a bit
# that is always clear.  The adaptive and real Two Point variants share the
# fixed variant's layout and differ only in how they estimate `t`.
#
# ## Keys for a handful of rays
#
# Two rays that start at the same place but point in opposite directions get
# the same Origin key.  A direction-aware layout separates them.

# %%
box = Aabb((0, 0, 0), (1, 1, 1))
ctx = KeyContext(box)
rays = RayBatch(
    origins=[[0.2, 0.2, 0.2], [0.2, 0.2, 0.2], [0.8, 0.1, 0.5]],
    directions=[[1, 0, 0], [-1, 0, 0], [0, 0, 1]],
    tmax=np.inf,
    kind=1,
)
for m in (KeyMethod.ORIGIN, KeyMethod.AILA_COMPACT, KeyMethod.COSTA, KeyMethod.TWO_POINT_FIXED):
    print(f"{m.value:>14}", [f"{k:08x}" for k in compute_keys(rays, m, ctx).tolist()])

# %% [markdown]
# ## 64-bit keys
#
# The wide variant repeats the same interleaving with more bits per
# component.  Its upper half is exactly the 32-bit key, so widening a key only
# breaks ties among rays that already shared a 32-bit key.

# %%
wide = KeyContext(box, key_bits=64)
k32 = compute_keys(rays, KeyMethod.AILA_COMPACT, ctx)
k64 = compute_keys(rays, KeyMethod.AILA_COMPACT, wide)
print((k64 >> np.uint64(32)).astype(np.uint32) == k32)
