"""Hilbert-curve ordering, transport metrics and occupancy data for point clouds."""
from .cloud_core import fps_indices, fps_subsample, hilbert_sort, order_by
from .hilbert_codec import CurveConfig, hilbert_decode, hilbert_encode, morton_decode, morton_encode
from .metrics import chamfer, compare_orderings, emd, locality_score
from .ot_sinkhorn import SinkhornParams, exact_emd, sinkhorn_distance, sinkhorn_grad

__version__ = "0.1.0"
