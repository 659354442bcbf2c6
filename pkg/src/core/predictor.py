# ============================================================================
# FILE: predictor.py
# ============================================================================

from dataclasses import dataclass
from typing import Union

import numpy as np

from src.errors import DimensionError, InputError
from src.models import IntensityVector

Value = Union[float, np.ndarray]


@dataclass(frozen=True, eq=False)
class PredictedIntensities:
    """Extrapolated diagonal and vertical intensities for one step"""

    step: int
    c: np.ndarray
    d: np.ndarray


def extrapolate(value_prev: Value, value_curr: Value, t_prev: int, t_curr: int, t: int) -> Value:
    """Continue the line through (t_prev, value_prev) and (t_curr, value_curr) to t"""
    if t_prev == t_curr:
        raise InputError(f"cannot extrapolate from two samples at the same step {t_curr}")
    if t_prev > t_curr:
        raise InputError(f"t_prev {t_prev} must precede t_curr {t_curr}")
    if t <= t_curr:
        raise InputError(f"target step {t} must come after t_curr {t_curr}")
    slope = (np.asarray(value_curr) - np.asarray(value_prev)) / (t_curr - t_prev)
    out = value_curr + slope * (t - t_curr)
    return float(out) if np.ndim(out) == 0 else out


def predict_window(x_prev: IntensityVector, x_curr: IntensityVector, steps: range) -> list[PredictedIntensities]:
    """Per-step c and d over a window; e is left to the static block-diagonal rule"""
    if x_prev.grid != x_curr.grid:
        raise DimensionError("intensity vectors come from different grids")
    if steps.start != x_curr.step + 1:
        raise InputError(f"window must start at step {x_curr.step + 1}, got {steps.start}")
    out = []
    for t in steps:
        c = extrapolate(x_prev.c, x_curr.c, x_prev.step, x_curr.step, t)
        d = extrapolate(x_prev.d, x_curr.d, x_prev.step, x_curr.step, t)
        out.append(PredictedIntensities(step=t, c=np.asarray(c), d=np.asarray(d)))
    return out


def block_diag_decision(e_warm_prev: np.ndarray, e_warm_last: np.ndarray, tau_e: float) -> np.ndarray:
    """Frame r is preserved iff min(e_prev[r], e_last[r]) > tau_e"""
    e_prev = np.asarray(e_warm_prev, dtype=float)
    e_last = np.asarray(e_warm_last, dtype=float)
    if e_prev.shape != e_last.shape:
        raise DimensionError(f"block-diagonal intensities differ in length: {e_prev.shape} vs {e_last.shape}")
    return np.minimum(e_prev, e_last) > tau_e


def linearity_error(actual: np.ndarray, predicted: np.ndarray) -> float:
    """RMS residual over the segment divided by the segment's value range

    Below 0.1 counts as strong linearity. A flat segment has zero range; it
    scores 0 when matched exactly and inf otherwise.
    """
    actual = np.asarray(actual, dtype=float)
    predicted = np.asarray(predicted, dtype=float)
    if actual.shape != predicted.shape or actual.size == 0:
        raise DimensionError("actual and predicted must be non-empty and equally shaped")
    rms = float(np.sqrt(np.mean((actual - predicted) ** 2)))
    spread = float(actual.max() - actual.min())
    if spread == 0.0:
        return 0.0 if rms == 0.0 else float("inf")
    return rms / spread
