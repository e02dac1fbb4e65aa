"""Ray reordering for coherent BVH traversal.

Sort keys that map rays to a space-filling curve, a stable radix sort and
gather, a BVH tracer with divergence and cache proxies, and the capsule
coherence measure used to compare orderings.
"""
import os

# numba's TBB layer warns on older system TBB.  Parallel merges use fixed
# chunking, so the layer choice never changes results.
os.environ.setdefault("NUMBA_THREADING_LAYER", "workqueue")

from .coherence import Capsule, CoherenceReport, capsule_area, capsule_fit, mean_measure, pearson  # noqa: E402
from .estimator import (EstimatorConfig, LengthHashTable, estimate_adaptive, estimate_fixed,  # noqa: E402
                        table_accumulate, table_init, terminate_real)
from .geom import Aabb, Ray, RayBatch, RayKind  # noqa: E402
from .keys import KeyContext, KeyMethod, compute_keys, layout_for  # noqa: E402
from .sortreorder import SortPlan, gather_reorder, pipeline, radix_sort_pairs, segmented_sort_pairs  # noqa: E402
from .tracer import any_hit, build_bvh, closest_hit, trace_batch  # noqa: E402

__all__ = [
    "Aabb", "Ray", "RayBatch", "RayKind",
    "KeyContext", "KeyMethod", "compute_keys", "layout_for",
    "EstimatorConfig", "LengthHashTable", "estimate_adaptive", "estimate_fixed", "table_accumulate",
    "table_init", "terminate_real",
    "SortPlan", "gather_reorder", "pipeline", "radix_sort_pairs", "segmented_sort_pairs",
    "any_hit", "build_bvh", "closest_hit", "trace_batch",
    "Capsule", "CoherenceReport", "capsule_area", "capsule_fit", "mean_measure", "pearson",
]
