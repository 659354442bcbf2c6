# ============================================================================
# FILE: basis.py
# ============================================================================
"""
Supports of the three pattern families on the n x n block grid.

Indices are 0-based. ParallelDiagonal k covers j - i = k - (n - 1),
Vertical k covers column k, BlockDiagonal k covers frame k's square.
Every vectorization in the repo is row-major (numpy's default ravel).
"""

from dataclasses import dataclass
from enum import IntEnum
from typing import Optional

import numpy as np

from src.errors import DesignMatrixTooLarge, PatternIndexError
from src.models import GridLayout
from src.settings import load_settings


class PatternFamily(IntEnum):
    # value doubles as the tie-break rank in Top-K selection
    PARALLEL_DIAGONAL = 0
    VERTICAL = 1
    BLOCK_DIAGONAL = 2

    @property
    def label(self) -> str:
        return self.name.lower()

    @classmethod
    def from_label(cls, label: str) -> "PatternFamily":
        try:
            return cls[label.strip().upper()]
        except KeyError:
            raise PatternIndexError(f"unknown pattern family {label!r}") from None


@dataclass(frozen=True, order=True)
class PatternId:
    family: PatternFamily
    index: int

    def __str__(self) -> str:
        return f"{self.family.label}[{self.index}]"


def family_size(family: PatternFamily, layout: GridLayout) -> int:
    if family is PatternFamily.PARALLEL_DIAGONAL:
        return layout.n_diagonals
    if family is PatternFamily.VERTICAL:
        return layout.grid
    return layout.frames


def check_pattern(pid: PatternId, layout: GridLayout) -> None:
    size = family_size(pid.family, layout)
    if not 0 <= pid.index < size:
        raise PatternIndexError(f"{pid} out of range, {pid.family.label} has {size} patterns")


def offset(pid: PatternId, layout: GridLayout) -> Optional[int]:
    """Diagonal offset j - i for ParallelDiagonal patterns, None otherwise"""
    if pid.family is not PatternFamily.PARALLEL_DIAGONAL:
        return None
    return pid.index - (layout.grid - 1)


def support_mask(pid: PatternId, layout: GridLayout) -> np.ndarray:
    """Boolean n x n indicator of the pattern's basis matrix"""
    check_pattern(pid, layout)
    n = layout.grid
    if pid.family is PatternFamily.PARALLEL_DIAGONAL:
        return np.eye(n, k=offset(pid, layout), dtype=bool)
    out = np.zeros((n, n), dtype=bool)
    if pid.family is PatternFamily.VERTICAL:
        out[:, pid.index] = True
    else:
        sl = layout.frame_slice(pid.index)
        out[sl, sl] = True
    return out


def support(pid: PatternId, layout: GridLayout) -> frozenset[tuple[int, int]]:
    rows, cols = np.nonzero(support_mask(pid, layout))
    return frozenset(zip(rows.tolist(), cols.tolist()))


def all_patterns(layout: GridLayout) -> list[PatternId]:
    """Every pattern in design-matrix column order: C, then D, then E"""
    return [
        PatternId(family, k)
        for family in PatternFamily
        for k in range(family_size(family, layout))
    ]


def design_matrix_bytes(layout: GridLayout) -> int:
    return layout.grid**2 * layout.pool_size * 8


def materialize_design_matrix(layout: GridLayout, max_bytes: Optional[int] = None) -> np.ndarray:
    """Explicit M with one row-major vectorized basis per column (oracle use only)"""
    cap = max_bytes if max_bytes is not None else load_settings().max_design_bytes
    required = design_matrix_bytes(layout)
    if required > cap:
        raise DesignMatrixTooLarge(required, cap)

    patterns = all_patterns(layout)
    m = np.empty((layout.grid**2, len(patterns)))
    for col, pid in enumerate(patterns):
        m[:, col] = support_mask(pid, layout).ravel()
    return m
