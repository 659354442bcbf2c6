# ============================================================================
# FILE: reconstruct.py
# ============================================================================

import numpy as np

from src.errors import DimensionError, UndefinedMetricError
from src.models import AttentionMap, SparsityMap


def reconstruct_attention(masked: AttentionMap, mask: np.ndarray, previous: AttentionMap) -> AttentionMap:
    """Take masked entries where the mask passes, previous reconstruction elsewhere"""
    mask = np.asarray(mask, dtype=bool)
    if not (masked.values.shape == mask.shape == previous.values.shape):
        raise DimensionError(
            f"shapes differ: masked {masked.values.shape}, mask {mask.shape}, previous {previous.values.shape}"
        )
    return AttentionMap(values=np.where(mask, masked.values, previous.values), step=masked.step)


def _relative_distance(a: SparsityMap, ref: SparsityMap, metric: str) -> float:
    if a.values.shape != ref.values.shape:
        raise DimensionError(f"{metric}: shapes {a.values.shape} and {ref.values.shape} differ")
    norm = np.linalg.norm(ref.values)
    if norm == 0.0:
        raise UndefinedMetricError(f"{metric} undefined for an all-zero reference map")
    return float(np.linalg.norm(a.values - ref.values) / norm)


def nre(reconstructed: SparsityMap, ground_truth: SparsityMap) -> float:
    """Normalized reconstruction error"""
    return _relative_distance(reconstructed, ground_truth, "NRE")


def der(current: SparsityMap, reference: SparsityMap) -> float:
    """Difference error ratio: drift from the reference (normally the step-m map)"""
    return _relative_distance(current, reference, "DER")
