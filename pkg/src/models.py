from dataclasses import dataclass, field
from typing import Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from src.errors import DimensionError, InputError, LayoutError

# ============================================================================
# LAYOUT AND SCHEDULE
# ============================================================================


class GridLayout(BaseModel):
    """Token grid split into B x B blocks and f equal frames on the diagonal"""

    model_config = ConfigDict(frozen=True)

    n_tokens: int = Field(..., gt=0, description="Tokens per head (N)")
    block_size: int = Field(..., gt=0, description="Tokens per block side (B)")
    grid: int = Field(..., gt=0, description="Blocks per side, n = N / B")
    frames: int = Field(..., gt=0, description="Block-diagonal regions (f)")
    blocks_per_frame: int = Field(..., gt=0, description="Blocks per frame side, s = n / f")

    @model_validator(mode="after")
    def _check_arithmetic(self) -> "GridLayout":
        if self.grid * self.block_size != self.n_tokens:
            raise ValueError("grid * block_size must equal n_tokens")
        if self.blocks_per_frame * self.frames != self.grid:
            raise ValueError("blocks_per_frame * frames must equal grid")
        return self

    @property
    def n_diagonals(self) -> int:
        return 2 * self.grid - 1

    @property
    def pool_size(self) -> int:
        """Length of the full intensity vector, (2n - 1) + n + f"""
        return self.n_diagonals + self.grid + self.frames

    def frame_slice(self, r: int) -> slice:
        s = self.blocks_per_frame
        return slice(r * s, (r + 1) * s)


def make_layout(n_tokens: int, block_size: int, frames: int) -> GridLayout:
    """Derive grid and frame sizes, rejecting non-divisible inputs"""
    for name, value in (("n_tokens", n_tokens), ("block_size", block_size), ("frames", frames)):
        if value <= 0:
            raise LayoutError(f"{name} must be positive, got {value}")
    if n_tokens % block_size:
        raise LayoutError(f"block_size {block_size} does not divide n_tokens {n_tokens}")
    grid = n_tokens // block_size
    if grid % frames:
        raise LayoutError(f"frames {frames} does not divide grid {grid} (= {n_tokens} / {block_size})")
    return GridLayout(
        n_tokens=n_tokens,
        block_size=block_size,
        grid=grid,
        frames=frames,
        blocks_per_frame=grid // frames,
    )


class DenoisingSchedule(BaseModel):
    """Step plan: m full-attention warm-up steps, then re-estimation every interval"""

    model_config = ConfigDict(frozen=True)

    total_steps: int = Field(50, description="Total denoising steps (T)")
    warmup: int = Field(12, ge=2, description="Full-attention warm-up steps (m)")
    interval: int = Field(10, ge=1, description="Steps between re-estimations")

    @model_validator(mode="after")
    def _check_order(self) -> "DenoisingSchedule":
        if not self.warmup < self.total_steps:
            raise ValueError(f"warmup {self.warmup} must be below total_steps {self.total_steps}")
        return self

    @property
    def prediction_steps(self) -> tuple[int, ...]:
        """t_p(i) = m + i * interval for every i that stays within the schedule"""
        return tuple(range(self.warmup, self.total_steps + 1, self.interval))


class SolverConfig(BaseModel):
    """Decomposition and mask-selection parameters"""

    model_config = ConfigDict(frozen=True, populate_by_name=True)

    lam: float = Field(1e-8, ge=0.0, alias="lambda", description="Tikhonov parameter")
    eta: float = Field(1e-4, ge=0.0, description="Sparsity threshold on attention weights")
    tau_e: float = Field(0.5, description="Block-diagonal preservation threshold")
    top_k: int = Field(200, ge=1, description="Patterns kept by the Top-K router")
    selection_direction: Literal["ascending", "descending"] = Field(
        "ascending", description="Order in which intensities are ranked"
    )


# ============================================================================
# ARRAY PAYLOADS
# ============================================================================


def _frozen(values, ndim: int, dtype=float) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    if arr.ndim != ndim:
        raise DimensionError(f"expected a {ndim}-d array, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


def _square(arr: np.ndarray, what: str) -> None:
    if arr.shape[0] != arr.shape[1]:
        raise DimensionError(f"{what} must be square, got shape {arr.shape}")


@dataclass(frozen=True, eq=False)
class AttentionMap:
    """Post-softmax attention weights of one head at one step"""

    values: np.ndarray
    step: int = 0

    def __post_init__(self):
        arr = _frozen(self.values, 2)
        _square(arr, "attention map")
        object.__setattr__(self, "values", arr)

    @property
    def side(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True, eq=False)
class SparsityMap:
    """Per-block fraction of sub-threshold attention entries"""

    values: np.ndarray
    step: int = 0

    def __post_init__(self):
        arr = _frozen(self.values, 2)
        _square(arr, "sparsity map")
        if not np.all((arr >= 0.0) & (arr <= 1.0)):
            raise InputError("sparsity values must lie in [0, 1]")
        object.__setattr__(self, "values", arr)

    @property
    def side(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True, eq=False)
class IntensityVector:
    """Fitted pattern intensities X = [c, d, e]

    c has one entry per diagonal (index k <-> offset k - (n - 1)), d one per
    column and e one per frame. solver_path records which factorization
    produced the vector, when it came from a solve.
    """

    c: np.ndarray
    d: np.ndarray
    e: np.ndarray
    step: int = 0
    solver_path: Optional[str] = field(default=None)

    def __post_init__(self):
        for name in ("c", "d", "e"):
            object.__setattr__(self, name, _frozen(getattr(self, name), 1))
        if len(self.c) != 2 * len(self.d) - 1:
            raise DimensionError(
                f"c has {len(self.c)} entries, expected 2 * {len(self.d)} - 1"
            )

    @property
    def grid(self) -> int:
        return len(self.d)

    @property
    def frames(self) -> int:
        return len(self.e)

    def flatten(self) -> np.ndarray:
        return np.concatenate([self.c, self.d, self.e])

    @classmethod
    def from_flat(
        cls,
        x: np.ndarray,
        layout: GridLayout,
        step: int = 0,
        solver_path: Optional[str] = None,
    ) -> "IntensityVector":
        x = np.asarray(x, dtype=float)
        if x.shape != (layout.pool_size,):
            raise DimensionError(f"expected {layout.pool_size} intensities, got shape {x.shape}")
        nc, nd = layout.n_diagonals, layout.grid
        return cls(
            c=x[:nc],
            d=x[nc : nc + nd],
            e=x[nc + nd :],
            step=step,
            solver_path=solver_path,
        )

    def check_layout(self, layout: GridLayout) -> None:
        if self.grid != layout.grid or self.frames != layout.frames:
            raise DimensionError(
                f"intensities sized for n={self.grid}, f={self.frames}; "
                f"layout has n={layout.grid}, f={layout.frames}"
            )


@dataclass(frozen=True, eq=False)
class BlockMask:
    """n x n pass/skip decision; True means the block is computed"""

    passes: np.ndarray
    step: int = 0
    head: int = 0

    def __post_init__(self):
        arr = _frozen(self.passes, 2, dtype=bool)
        _square(arr, "block mask")
        object.__setattr__(self, "passes", arr)

    @property
    def side(self) -> int:
        return self.passes.shape[0]
