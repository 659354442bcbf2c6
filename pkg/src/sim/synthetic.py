# ============================================================================
# FILE: synthetic.py
# ============================================================================
"""
Synthetic attention maps with known pattern trajectories.

A target sparsity map is built on the block grid from interpolated pattern
intensities, perturbed, clipped, and quantized to multiples of 1/B^2. It is
then lifted to token space: each block receives exactly that many cold
entries (below eta after row normalization) and hot entries everywhere else,
so attention_to_sparsity recovers the target map exactly.

Random streams are keyed on (seed, head, stream[, step]) so every map is a
pure function of its arguments.
"""

import math

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from src.core.basis import PatternFamily, PatternId, support_mask
from src.errors import ConfigError
from src.models import AttentionMap, GridLayout, SparsityMap

_NOISE_STREAM = 0
_CHAOS_STREAM = 1
VALUES_STREAM = 2

# cold weight relative to eta, before row normalization
_COLD_SCALE = 1e-2


class PatternTrajectory(BaseModel):
    """Piecewise-linear intensity of one pattern over denoising steps"""

    model_config = ConfigDict(frozen=True)

    family: PatternFamily
    index: int = Field(..., ge=0)
    knots: tuple[tuple[int, float], ...] = Field(..., min_length=1, description="(step, value) pairs")

    @field_validator("knots")
    @classmethod
    def _check_knots(cls, knots):
        steps = [s for s, _ in knots]
        if any(b <= a for a, b in zip(steps, steps[1:])):
            raise ValueError(f"knot steps must be strictly increasing, got {steps}")
        if not all(math.isfinite(v) for _, v in knots):
            raise ValueError("knot values must be finite")
        return knots

    @property
    def pattern(self) -> PatternId:
        return PatternId(self.family, self.index)

    def value_at(self, t: int) -> float:
        """Linear between knots, held constant outside them"""
        steps, values = zip(*self.knots)
        return float(np.interp(t, steps, values))


class TrajectorySpec(BaseModel):
    """Ground-truth sparsity dynamics for the simulator"""

    model_config = ConfigDict(frozen=True)

    patterns: tuple[PatternTrajectory, ...] = Field(default_factory=tuple)
    background: float = Field(0.0, description="Sparsity of blocks no pattern touches")
    noise_sigma: float = Field(0.0, ge=0.0, description="Std of the persistent per-head noise field")
    warmup_chaos: float = Field(0.0, ge=0.0, description="Std of the per-step perturbation during warm-up")
    chaos_steps: int = Field(12, ge=0, description="Steps t <= chaos_steps receive warm-up chaos")
    seed: int = Field(0, ge=0)


def target_sparsity(spec: TrajectorySpec, layout: GridLayout, t: int, head: int = 0) -> SparsityMap:
    """Ground-truth sparsity of head `head` at step t, quantized to 1/B^2"""
    n, b2 = layout.grid, layout.block_size**2
    values = np.full((n, n), spec.background, dtype=float)
    for traj in spec.patterns:
        values[support_mask(traj.pattern, layout)] += traj.value_at(t)

    if spec.noise_sigma > 0:
        rng = np.random.default_rng([spec.seed, head, _NOISE_STREAM])
        values += rng.normal(0.0, spec.noise_sigma, size=(n, n))
    if spec.warmup_chaos > 0 and t <= spec.chaos_steps:
        rng = np.random.default_rng([spec.seed, head, _CHAOS_STREAM, t])
        values += rng.normal(0.0, spec.warmup_chaos, size=(n, n))

    # one hot entry per block; diagonal blocks keep B so every token row has one
    ceiling = np.full((n, n), 1.0 - 1.0 / b2)
    np.fill_diagonal(ceiling, 1.0 - 1.0 / layout.block_size)
    cold = np.rint(np.clip(values, 0.0, ceiling) * b2)
    return SparsityMap(cold / b2, step=t)


def _cold_rank(block_size: int) -> np.ndarray:
    """Fill order inside a block; the last B positions cover every row once"""
    x = np.arange(block_size)[:, None]
    y = np.arange(block_size)[None, :]
    return ((y - x) % block_size) * block_size + x


def lift_to_attention(sparsity: SparsityMap, layout: GridLayout, eta: float = 1e-4) -> AttentionMap:
    """Token-level attention map whose block sparsity under eta equals `sparsity`"""
    if layout.n_tokens * eta * 10 > 1:
        raise ConfigError(
            f"n_tokens {layout.n_tokens} too large for eta {eta}: informative entries would fall below 10 * eta"
        )
    b = layout.block_size
    cold = np.rint(sparsity.values * b * b).astype(int)
    rank = _cold_rank(b)
    is_cold = (rank[None, :, None, :] < cold[:, None, :, None]).reshape(layout.n_tokens, layout.n_tokens)
    weights = np.where(is_cold, _COLD_SCALE * eta, 1.0)
    return AttentionMap(weights / weights.sum(axis=1, keepdims=True), step=sparsity.step)


def synth_attention(
    spec: TrajectorySpec,
    layout: GridLayout,
    t: int,
    *,
    eta: float = 1e-4,
    head: int = 0,
) -> AttentionMap:
    return lift_to_attention(target_sparsity(spec, layout, t, head=head), layout, eta=eta)


def _ordered_knots(*pairs: tuple[int, float]) -> tuple[tuple[int, float], ...]:
    """Sort by step; on a repeated step the first pair wins"""
    seen: dict[int, float] = {}
    for step, value in pairs:
        seen.setdefault(step, value)
    return tuple(sorted(seen.items()))


def demo_trajectory(
    layout: GridLayout,
    total_steps: int = 50,
    seed: int = 0,
    noise_sigma: float = 0.02,
    warmup_chaos: float = 0.05,
    background: float = 0.8,
) -> TrajectorySpec:
    """Typical video-attention mixture: strong local diagonals, a few global
    columns and frame squares, drifting piecewise-linearly over the schedule"""
    n, s = layout.grid, layout.blocks_per_frame
    mid = total_steps // 2
    diag = PatternFamily.PARALLEL_DIAGONAL

    main = _ordered_knots((1, -0.45), (mid, -0.55), (total_steps, -0.5), (12, -0.5))
    near = _ordered_knots((1, -0.25), (total_steps, -0.2))
    across = _ordered_knots((1, -0.2), (mid, -0.3), (total_steps, -0.3))
    column = _ordered_knots((1, -0.1), (total_steps, -0.15))
    square = _ordered_knots((1, -0.05), (total_steps, -0.08))

    patterns = [PatternTrajectory(family=diag, index=n - 1, knots=main)]
    for k in (n - 2, n):
        if 0 <= k < layout.n_diagonals:
            patterns.append(PatternTrajectory(family=diag, index=k, knots=near))
    if layout.frames > 1:
        # same spatial position in neighbouring frames
        for k in (n - 1 - s, n - 1 + s):
            patterns.append(PatternTrajectory(family=diag, index=k, knots=across))
    for col in sorted({0, n // 3, (2 * n) // 3}):
        patterns.append(PatternTrajectory(family=PatternFamily.VERTICAL, index=col, knots=column))
    for r in range(layout.frames):
        patterns.append(PatternTrajectory(family=PatternFamily.BLOCK_DIAGONAL, index=r, knots=square))

    return TrajectorySpec(
        patterns=tuple(patterns),
        background=background,
        noise_sigma=noise_sigma,
        warmup_chaos=warmup_chaos,
        seed=seed,
    )
