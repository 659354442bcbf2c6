# ============================================================================
# FILE: attention.py
# ============================================================================

import numpy as np

from src.errors import AttentionError, DimensionError


def masked_softmax(scores: np.ndarray, token_mask: np.ndarray) -> np.ndarray:
    """Row softmax over passing entries; blocked entries get probability 0"""
    scores = np.asarray(scores, dtype=float)
    token_mask = np.asarray(token_mask, dtype=bool)
    if scores.shape != token_mask.shape or scores.ndim != 2:
        raise DimensionError(f"scores {scores.shape} and mask {token_mask.shape} must be equal 2-d shapes")
    empty = ~token_mask.any(axis=1)
    if empty.any():
        raise AttentionError(f"{int(empty.sum())} rows fully blocked, first at row {int(np.argmax(empty))}")

    logits = np.where(token_mask, scores, -np.inf)
    logits = logits - logits.max(axis=1, keepdims=True)
    weights = np.where(token_mask, np.exp(logits), 0.0)
    return weights / weights.sum(axis=1, keepdims=True)


def masked_attention(scores: np.ndarray, token_mask: np.ndarray, values: np.ndarray) -> np.ndarray:
    """softmax(A + M) V with M = 0 on passing entries and -inf elsewhere"""
    values = np.asarray(values, dtype=float)
    if values.ndim != 2 or values.shape[0] != np.shape(scores)[1]:
        raise DimensionError(f"values shape {values.shape} does not fit scores {np.shape(scores)}")
    return masked_softmax(scores, token_mask) @ values


def relative_error(approx: np.ndarray, exact: np.ndarray) -> float:
    """Relative Frobenius distance; 0 when both are zero"""
    norm = np.linalg.norm(exact)
    diff = np.linalg.norm(np.asarray(approx) - np.asarray(exact))
    if norm == 0.0:
        return 0.0 if diff == 0.0 else float("inf")
    return float(diff / norm)
