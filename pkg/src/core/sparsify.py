# ============================================================================
# FILE: sparsify.py
# ============================================================================

import numpy as np

from src.errors import DimensionError
from src.models import AttentionMap, GridLayout, SparsityMap


def attention_to_sparsity(map: AttentionMap, layout: GridLayout, eta: float = 1e-4) -> SparsityMap:
    """Fraction of entries strictly below eta inside each B x B block"""
    if map.side != layout.n_tokens:
        raise DimensionError(
            f"attention map is {map.side}x{map.side}, layout expects {layout.n_tokens}x{layout.n_tokens}"
        )
    n, b = layout.grid, layout.block_size
    below = (map.values < eta).reshape(n, b, n, b)
    counts = below.sum(axis=(1, 3))
    return SparsityMap(values=counts / float(b * b), step=map.step)
