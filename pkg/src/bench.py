# ============================================================================
# FILE: bench.py
# ============================================================================

import logging
import statistics
import time
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from src.core.basis import design_matrix_bytes
from src.core.solver import (
    assemble_system,
    dense_oracle_solve,
    null_basis,
    oracle_flops,
    solve_intensities,
    structured_flops,
)
from src.models import SolverConfig, SparsityMap, make_layout
from src.settings import load_settings

logger = logging.getLogger(__name__)

BENCH_COLUMNS = (
    "n",
    "structured_seconds",
    "oracle_seconds",
    "assembly_seconds",
    "structured_flops",
    "oracle_flops",
    "speedup",
)


@dataclass(frozen=True)
class BenchRow:
    n: int
    structured_seconds: float
    oracle_seconds: Optional[float]
    assembly_seconds: float
    structured_flops: int
    oracle_flops: int

    @property
    def speedup(self) -> Optional[float]:
        """Oracle time over structured time; None when the oracle was skipped"""
        if self.oracle_seconds is None:
            return None
        return self.oracle_seconds / self.structured_seconds

    def as_row(self) -> dict:
        return {c: getattr(self, c) for c in BENCH_COLUMNS}


def _median_seconds(fn: Callable[[], object], reps: int) -> float:
    times = []
    for _ in range(reps):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return statistics.median(times)


def _cold_structured(map: SparsityMap, layout, cfg: SolverConfig) -> None:
    # include the null-space computation in every repetition
    null_basis.cache_clear()
    solve_intensities(map, layout, cfg)


def run_bench(
    sizes: Sequence[int],
    frames: int = 1,
    reps: int = 3,
    seed: int = 0,
    lam: float = 1e-8,
) -> list[BenchRow]:
    """Time structured and explicit solves of a random map per grid size n"""
    cfg = SolverConfig(lam=lam)
    cap = load_settings().max_design_bytes
    rows = []
    for n in sizes:
        layout = make_layout(n, 1, frames)
        rng = np.random.default_rng([seed, n])
        smap = SparsityMap(rng.uniform(size=(n, n)))

        structured = _median_seconds(lambda: _cold_structured(smap, layout, cfg), reps)
        assembly = _median_seconds(lambda: assemble_system(smap, layout, lam), reps)
        oracle = None
        if design_matrix_bytes(layout) <= cap:
            oracle = _median_seconds(lambda: dense_oracle_solve(smap, layout, lam=lam, max_bytes=cap), reps)
        else:
            logger.warning("n=%d: explicit design matrix exceeds %d bytes, oracle skipped", n, cap)

        logger.info("n=%d structured %.4fs oracle %s", n, structured, oracle)
        rows.append(
            BenchRow(
                n=n,
                structured_seconds=structured,
                oracle_seconds=oracle,
                assembly_seconds=assembly,
                structured_flops=structured_flops(layout),
                oracle_flops=oracle_flops(layout),
            )
        )
    return rows


def fit_exponent(sizes: Sequence[int], costs: Sequence[float]) -> float:
    """Least-squares slope of log(cost) against log(n)"""
    slope, _ = np.polyfit(np.log(sizes), np.log(costs), 1)
    return float(slope)


def scaling_report(rows: Sequence[BenchRow]) -> list[str]:
    """Human-readable scaling lines: fitted exponents and oracle dominance"""
    lines = []
    sizes = [r.n for r in rows]
    if len(set(sizes)) > 1:
        flops = fit_exponent(sizes, [r.structured_flops for r in rows])
        seconds = fit_exponent(sizes, [r.structured_seconds for r in rows])
        lines.append(f"structured operation count grows as n^{flops:.2f}")
        lines.append(f"structured solve time grows as n^{seconds:.2f}")
    timed = [r for r in rows if r.speedup is not None]
    slower = [r.n for r in timed if r.speedup <= 1.0]
    if slower:
        lines.append(f"structured path not faster than the oracle at n = {', '.join(map(str, slower))}")
    elif timed:
        fastest = min(r.speedup for r in timed)
        lines.append(f"structured path faster than the oracle at every timed n (min speedup {fastest:.1f}x)")
    return lines
