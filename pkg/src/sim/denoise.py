# ============================================================================
# FILE: denoise.py
# ============================================================================
"""
Desk-scale denoising loop: full-attention warm-up, then Top-K masked steps
with periodic reconstruction and re-estimation of the pattern intensities.

Each head walks through three node functions over a mutable HeadState:
warmup_node once, then masked_step_node per step and reestimate_node at
every later prediction step. The reconstruction only changes at prediction
steps: blocks the mask passes there take that step's masked probabilities,
the rest keep the previous prediction step's values, starting from A^(m).
Heads are independent and run in a thread pool.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields
from typing import Any, Callable, Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from src.core.basis import PatternFamily, PatternId
from src.core.masks import LayerMasks, build_block_mask, concat_heads, sparsity_ratio, topk_patterns, upsample_mask
from src.core.predictor import PredictedIntensities, block_diag_decision, predict_window
from src.core.reconstruct import der, nre, reconstruct_attention
from src.core.solver import nae, solve_intensities
from src.core.sparsify import attention_to_sparsity
from src.errors import ModError, SimulationError, UndefinedMetricError
from src.models import (
    AttentionMap,
    BlockMask,
    DenoisingSchedule,
    GridLayout,
    IntensityVector,
    SolverConfig,
    SparsityMap,
)
from src.settings import load_settings
from src.sim.attention import masked_softmax, relative_error
from src.sim.synthetic import VALUES_STREAM, TrajectorySpec, lift_to_attention, target_sparsity

logger = logging.getLogger(__name__)

Phase = Literal["warmup", "masked", "reestimate"]


class SimulationConfig(BaseModel):
    """Simulator options outside the solver and schedule"""

    model_config = ConfigDict(frozen=True)

    heads: int = Field(4, ge=1, description="Attention heads simulated independently")
    value_dim: int = Field(8, ge=1, description="Columns of the shared random values matrix")
    force_main_diagonal: bool = Field(True, description="Always pass the main-diagonal pattern")
    dump_masks: bool = Field(False, description="Keep per-step block masks in the report")


@dataclass(frozen=True)
class TraceRecord:
    head: int
    step: int
    phase: Phase
    nae: Optional[float]
    nre: Optional[float]
    der: Optional[float]
    sparsity_ratio: float
    output_error: float
    solver_path: Optional[str] = None

    def as_row(self) -> dict[str, Any]:
        return {
            "head": self.head,
            "step": self.step,
            "phase": self.phase,
            "nae": self.nae,
            "nre": self.nre,
            "der": self.der,
            "sparsity_ratio": self.sparsity_ratio,
            "output_error": self.output_error,
            "solver_path": self.solver_path,
        }


TRACE_COLUMNS = tuple(f.name for f in fields(TraceRecord))


@dataclass(frozen=True)
class TraceReport:
    records: tuple[TraceRecord, ...]
    config: dict[str, Any]
    masks: dict[int, LayerMasks] = field(default_factory=dict)

    def for_head(self, head: int) -> list[TraceRecord]:
        return [r for r in self.records if r.head == head]

    def summary(self) -> list[dict[str, Any]]:
        """Per-head and overall means; NAE, mask and output metrics cover post warm-up steps only"""
        heads = sorted({r.head for r in self.records})
        rows = [_summarize(str(h), self.for_head(h)) for h in heads]
        rows.append(_summarize("all", list(self.records)))
        return rows


SUMMARY_COLUMNS = ("head", "mean_nae", "mean_nre", "mean_der", "mean_sparsity_ratio", "mean_output_error")


def _mean(values: list[Optional[float]]) -> Optional[float]:
    present = [v for v in values if v is not None]
    return float(np.mean(present)) if present else None


def _summarize(label: str, records: list[TraceRecord]) -> dict[str, Any]:
    after = [r for r in records if r.phase != "warmup"]
    return {
        "head": label,
        "mean_nae": _mean([r.nae for r in after]),
        "mean_nre": _mean([r.nre for r in records]),
        "mean_der": _mean([r.der for r in records]),
        "mean_sparsity_ratio": _mean([r.sparsity_ratio for r in after]),
        "mean_output_error": _mean([r.output_error for r in after]),
    }


def _metric(fn: Callable[..., float], *args) -> Optional[float]:
    try:
        return fn(*args)
    except UndefinedMetricError:
        return None


# ============================================================================
# PER-HEAD STATE AND NODES
# ============================================================================


@dataclass
class HeadState:
    """Everything one head carries from step to step"""

    head: int
    layout: GridLayout
    schedule: DenoisingSchedule
    cfg: SolverConfig
    spec: TrajectorySpec
    sim: SimulationConfig
    values: np.ndarray
    reference: SparsityMap
    step: int = 0
    x_prev: Optional[IntensityVector] = None
    x_curr: Optional[IntensityVector] = None
    preserve: Optional[np.ndarray] = None
    # fused map as of the last prediction step, seeded with A^(m)
    reconstruction: Optional[AttentionMap] = None
    # masked probabilities and token mask of the latest masked step
    masked: Optional[AttentionMap] = None
    token_mask: Optional[np.ndarray] = None
    predictions: dict[int, PredictedIntensities] = field(default_factory=dict)
    records: list[TraceRecord] = field(default_factory=list)
    masks: list[BlockMask] = field(default_factory=list)

    def truth(self, t: int) -> SparsityMap:
        return target_sparsity(self.spec, self.layout, t, head=self.head)

    def attention(self, t: int) -> AttentionMap:
        return lift_to_attention(self.truth(t), self.layout, eta=self.cfg.eta)

    def extend_predictions(self, start: int) -> None:
        stop = min(start + self.schedule.interval - 1, self.schedule.total_steps)
        if start > stop:
            return
        for p in predict_window(self.x_prev, self.x_curr, range(start, stop + 1)):
            self.predictions[p.step] = p


def init_head_state(
    head: int,
    schedule: DenoisingSchedule,
    layout: GridLayout,
    cfg: SolverConfig,
    spec: TrajectorySpec,
    sim: SimulationConfig,
) -> HeadState:
    rng = np.random.default_rng([spec.seed, head, VALUES_STREAM])
    return HeadState(
        head=head,
        layout=layout,
        schedule=schedule,
        cfg=cfg,
        spec=spec,
        sim=sim,
        values=rng.normal(size=(layout.n_tokens, sim.value_dim)),
        reference=target_sparsity(spec, layout, schedule.warmup, head=head),
    )


def _attend(state: HeadState, attention: AttentionMap, token_mask: np.ndarray) -> tuple[np.ndarray, float]:
    """Masked probabilities and the relative output error against dense attention"""
    scores = np.log(attention.values)
    full = masked_softmax(scores, np.ones_like(token_mask)) @ state.values
    probs = masked_softmax(scores, token_mask)
    return probs, relative_error(probs @ state.values, full)


def warmup_node(state: HeadState) -> HeadState:
    """Full attention for t <= m, then fit the last two maps and open the first window"""
    m = state.schedule.warmup
    dense = np.ones((state.layout.n_tokens, state.layout.n_tokens), dtype=bool)
    fits: dict[int, IntensityVector] = {}
    attention = None
    for t in range(1, m + 1):
        state.step = t
        attention = state.attention(t)
        _, error = _attend(state, attention, dense)
        smap = attention_to_sparsity(attention, state.layout, eta=state.cfg.eta)
        fit = None
        if t >= m - 1:
            fit = solve_intensities(smap, state.layout, state.cfg)
            fits[t] = fit
        state.records.append(
            TraceRecord(
                head=state.head,
                step=t,
                phase="warmup",
                nae=_metric(nae, smap, fit, state.layout) if fit is not None else None,
                nre=None,
                der=_metric(der, smap, state.reference),
                sparsity_ratio=0.0,
                output_error=error,
                solver_path=fit.solver_path if fit is not None else None,
            )
        )

    state.x_prev, state.x_curr = fits[m - 1], fits[m]
    state.preserve = block_diag_decision(state.x_prev.e, state.x_curr.e, state.cfg.tau_e)
    state.reconstruction = attention
    state.extend_predictions(m + 1)
    logger.info(
        "head %d: warm-up done, %d of %d frames preserved",
        state.head,
        int(state.preserve.sum()),
        state.layout.frames,
    )
    return state


def _select(state: HeadState, pred: PredictedIntensities) -> list[PatternId]:
    selected = topk_patterns(pred.c, pred.d, state.cfg.top_k, state.cfg.selection_direction)
    main = PatternId(PatternFamily.PARALLEL_DIAGONAL, state.layout.grid - 1)
    if state.sim.force_main_diagonal and main not in selected:
        selected.append(main)
    return selected


def masked_step_node(state: HeadState, t: int) -> HeadState:
    """One Top-K masked step: mask the predicted patterns and emulate attention"""
    state.step = t
    pred = state.predictions.pop(t)
    block = build_block_mask(_select(state, pred), state.preserve, state.layout, step=t, head=state.head)
    token_mask = upsample_mask(block, state.layout)
    probs, error = _attend(state, state.attention(t), token_mask)
    state.masked, state.token_mask = AttentionMap(probs, step=t), token_mask

    truth = state.truth(t)
    x_hat = IntensityVector(c=pred.c, d=pred.d, e=state.x_curr.e, step=t)
    state.records.append(
        TraceRecord(
            head=state.head,
            step=t,
            phase="masked",
            nae=_metric(nae, truth, x_hat, state.layout),
            nre=None,
            der=_metric(der, truth, state.reference),
            sparsity_ratio=sparsity_ratio(block),
            output_error=error,
        )
    )
    if state.sim.dump_masks:
        state.masks.append(block)
    return state


def reestimate_node(state: HeadState, t: int) -> HeadState:
    """Fuse step t into the last reconstruction, sparsify, re-solve and predict the next window"""
    state.reconstruction = reconstruct_attention(state.masked, state.token_mask, state.reconstruction)
    estimate = attention_to_sparsity(state.reconstruction, state.layout, eta=state.cfg.eta)
    fit = solve_intensities(estimate, state.layout, state.cfg)

    last = state.records[-1]
    state.records[-1] = TraceRecord(
        **{
            **last.as_row(),
            "phase": "reestimate",
            "nre": _metric(nre, estimate, state.truth(t)),
            "solver_path": fit.solver_path,
        }
    )

    state.x_prev, state.x_curr = state.x_curr, fit
    state.extend_predictions(t + 1)
    logger.info("head %d: re-estimated at step %d via %s", state.head, t, fit.solver_path)
    return state


def _run_head(
    head: int,
    schedule: DenoisingSchedule,
    layout: GridLayout,
    cfg: SolverConfig,
    spec: TrajectorySpec,
    sim: SimulationConfig,
) -> HeadState:
    state = init_head_state(head, schedule, layout, cfg, spec, sim)
    try:
        warmup_node(state)
        later_predictions = set(schedule.prediction_steps[1:])
        for t in range(schedule.warmup + 1, schedule.total_steps + 1):
            masked_step_node(state, t)
            if t in later_predictions:
                reestimate_node(state, t)
    except ModError as e:
        raise SimulationError(head, state.step, e) from e
    return state


def run_denoising(
    schedule: DenoisingSchedule,
    layout: GridLayout,
    cfg: SolverConfig,
    spec: TrajectorySpec,
    heads: int,
    sim: Optional[SimulationConfig] = None,
) -> TraceReport:
    """Simulate every head through the whole schedule and merge the traces"""
    sim = (sim or SimulationConfig()).model_copy(update={"heads": heads})
    if spec.chaos_steps != schedule.warmup:
        spec = spec.model_copy(update={"chaos_steps": schedule.warmup})

    workers = min(heads, load_settings().workers)
    logger.info("simulating %d heads on %d workers, n=%d, T=%d", heads, workers, layout.grid, schedule.total_steps)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        states = list(pool.map(lambda h: _run_head(h, schedule, layout, cfg, spec, sim), range(heads)))

    records = sorted((r for s in states for r in s.records), key=lambda r: (r.head, r.step))
    masks: dict[int, LayerMasks] = {}
    if sim.dump_masks:
        by_step: dict[int, list[BlockMask]] = {}
        for s in states:
            for m in s.masks:
                by_step.setdefault(m.step, []).append(m)
        masks = {t: concat_heads(sorted(ms, key=lambda m: m.head)) for t, ms in sorted(by_step.items())}

    config = {
        "layout": layout.model_dump(),
        "schedule": {**schedule.model_dump(), "prediction_steps": list(schedule.prediction_steps)},
        "solver": cfg.model_dump(by_alias=True),
        "simulation": sim.model_dump(),
        "trajectory": spec.model_dump(mode="json"),
    }
    return TraceReport(records=tuple(records), config=config, masks=masks)
