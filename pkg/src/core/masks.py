# ============================================================================
# FILE: masks.py
# ============================================================================
"""
Top-K pattern routing and block-mask construction.

Selection merges diagonal and vertical intensities into one pool. Ties are
broken by family (diagonals first) and then by index, so Top-K(K) is always
a prefix of Top-K(K + 1).
"""

from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np

from src.core.basis import PatternFamily, PatternId, support_mask
from src.errors import DimensionError
from src.models import BlockMask, GridLayout

Direction = Literal["ascending", "descending"]


def topk_patterns(
    c_hat: np.ndarray,
    d_hat: np.ndarray,
    k: int,
    direction: Direction = "ascending",
) -> list[PatternId]:
    c_hat = np.asarray(c_hat, dtype=float)
    d_hat = np.asarray(d_hat, dtype=float)
    values = np.concatenate([c_hat, d_hat])
    family = np.concatenate(
        [
            np.full(len(c_hat), PatternFamily.PARALLEL_DIAGONAL),
            np.full(len(d_hat), PatternFamily.VERTICAL),
        ]
    )
    index = np.concatenate([np.arange(len(c_hat)), np.arange(len(d_hat))])
    key = values if direction == "ascending" else -values
    # lexsort: last key is primary
    order = np.lexsort((index, family, key))[: max(0, min(k, len(values)))]
    return [PatternId(PatternFamily(int(family[i])), int(index[i])) for i in order]


def build_block_mask(
    selected: Sequence[PatternId],
    preserve_blocks: np.ndarray,
    layout: GridLayout,
    step: int = 0,
    head: int = 0,
) -> BlockMask:
    """Union of selected supports and preserved frame squares"""
    preserve_blocks = np.asarray(preserve_blocks, dtype=bool)
    if preserve_blocks.shape != (layout.frames,):
        raise DimensionError(f"expected {layout.frames} frame flags, got shape {preserve_blocks.shape}")
    passes = np.zeros((layout.grid, layout.grid), dtype=bool)
    for pid in selected:
        passes |= support_mask(pid, layout)
    for r in np.flatnonzero(preserve_blocks):
        sl = layout.frame_slice(int(r))
        passes[sl, sl] = True
    return BlockMask(passes=passes, step=step, head=head)


def upsample_mask(mask: BlockMask, layout: GridLayout) -> np.ndarray:
    """Token-level N x N mask: each block's flag copied over its B x B tile"""
    if mask.side != layout.grid:
        raise DimensionError(f"block mask side {mask.side} does not match grid {layout.grid}")
    b = layout.block_size
    return np.repeat(np.repeat(mask.passes, b, axis=0), b, axis=1)


@dataclass(frozen=True)
class LayerMasks:
    """Per-head block masks of one layer at one step, indexed by head"""

    masks: tuple[BlockMask, ...]

    def __len__(self) -> int:
        return len(self.masks)

    def __getitem__(self, head: int) -> BlockMask:
        return self.masks[head]

    def __iter__(self):
        return iter(self.masks)

    def stacked(self) -> np.ndarray:
        return np.stack([m.passes for m in self.masks])


def concat_heads(masks: Sequence[BlockMask]) -> LayerMasks:
    if not masks:
        raise DimensionError("no head masks to concatenate")
    side, step = masks[0].side, masks[0].step
    for m in masks[1:]:
        if m.side != side:
            raise DimensionError(f"head {m.head} mask side {m.side} differs from {side}")
        if m.step != step:
            raise DimensionError(f"head {m.head} mask is for step {m.step}, expected {step}")
    return LayerMasks(masks=tuple(masks))


def sparsity_ratio(mask: BlockMask) -> float:
    """Skipped fraction of blocks"""
    total = mask.passes.size
    return (total - int(mask.passes.sum())) / total
