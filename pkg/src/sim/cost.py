# ============================================================================
# FILE: cost.py
# ============================================================================
"""
Analytic floating-point cost of one attention head.

Full attention: QK^T (2N^2 d) + softmax (5N^2: max, subtract, exp, sum,
divide) + PV (2N^2 d). Masked attention keeps the score product dense and
scales softmax and value aggregation with the pass fraction.
"""

from dataclasses import dataclass

from src.core.solver import structured_flops
from src.errors import InputError
from src.models import DenoisingSchedule, GridLayout

SOFTMAX_OPS_PER_ENTRY = 5


@dataclass(frozen=True)
class CostSummary:
    full: float
    sparsify: float
    solve: float
    masked: float
    reconstruct: float
    schedule_dense: float
    schedule_sparse: float

    @property
    def overhead_fraction(self) -> float:
        """(sparsify + solve) / full for one step"""
        return (self.sparsify + self.solve) / self.full

    @property
    def masked_ratio(self) -> float:
        return self.masked / self.full

    @property
    def speedup(self) -> float:
        return self.schedule_dense / self.schedule_sparse

    def as_row(self) -> dict[str, float]:
        return {
            "full": self.full,
            "sparsify": self.sparsify,
            "solve": self.solve,
            "masked": self.masked,
            "reconstruct": self.reconstruct,
            "overhead_fraction": self.overhead_fraction,
            "masked_ratio": self.masked_ratio,
            "schedule_dense": self.schedule_dense,
            "schedule_sparse": self.schedule_sparse,
            "speedup": self.speedup,
        }


def full_attention_flops(n_tokens: int, head_dim: int) -> float:
    n2 = float(n_tokens) ** 2
    return 4 * n2 * head_dim + SOFTMAX_OPS_PER_ENTRY * n2


def masked_attention_flops(n_tokens: int, head_dim: int, pass_fraction: float) -> float:
    n2 = float(n_tokens) ** 2
    scores = 2 * n2 * head_dim
    return scores + pass_fraction * (2 * n2 * head_dim + SOFTMAX_OPS_PER_ENTRY * n2)


def cost_model(
    layout: GridLayout,
    schedule: DenoisingSchedule,
    measured_ratio: float,
    head_dim: int = 128,
) -> CostSummary:
    """Per-step and whole-schedule cost; measured_ratio is the mask pass fraction"""
    if not 0.0 <= measured_ratio <= 1.0:
        raise InputError(f"pass fraction must lie in [0, 1], got {measured_ratio}")
    n2 = float(layout.n_tokens) ** 2
    full = full_attention_flops(layout.n_tokens, head_dim)
    # one comparison and one accumulation per entry
    sparsify = 2 * n2
    solve = float(structured_flops(layout))
    masked = masked_attention_flops(layout.n_tokens, head_dim, measured_ratio)
    reconstruct = n2

    m, total = schedule.warmup, schedule.total_steps
    later = len(schedule.prediction_steps) - 1
    decompositions = 2 + later
    sparse = m * full + (total - m) * masked + decompositions * (sparsify + solve) + later * reconstruct

    return CostSummary(
        full=full,
        sparsify=sparsify,
        solve=solve,
        masked=masked,
        reconstruct=reconstruct,
        schedule_dense=total * full,
        schedule_sparse=sparse,
    )
