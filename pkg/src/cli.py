# ============================================================================
# FILE: cli.py
# ============================================================================
"""
Command-line surface: `mod sparsify | decompose | mask | simulate | bench`.

Exit codes: 0 success, 1 usage, 2 input error, 3 numerical failure.
"""

import json
import logging
import os
import shutil
import sys
import tempfile
from pathlib import Path
from typing import Optional, Sequence

import click
import numpy as np
from pydantic import ValidationError

from src import __version__
from src.bench import BENCH_COLUMNS, run_bench, scaling_report
from src.core.masks import build_block_mask, topk_patterns
from src.core.predictor import block_diag_decision
from src.core.solver import nae, solve_intensities
from src.core.sparsify import attention_to_sparsity
from src.errors import DimensionError, InputError, ModError, UndefinedMetricError
from src.matrix_io import read_intensities, read_matrix, write_csv_rows, write_intensities, write_matrix
from src.models import AttentionMap, SolverConfig, SparsityMap, make_layout
from src.settings import load_settings
from src.sim.config import load_simulation_config
from src.sim.cost import cost_model
from src.sim.denoise import SUMMARY_COLUMNS, TRACE_COLUMNS, TraceReport, run_denoising

logger = logging.getLogger(__name__)

PROG = "mod"
FILE = click.Path(dir_okay=False, path_type=Path)


def _square(matrix: np.ndarray, path: Path) -> None:
    if matrix.shape[0] != matrix.shape[1]:
        raise DimensionError(f"{path}: expected a square matrix, got {matrix.shape[0]}x{matrix.shape[1]}")


# ============================================================================
# COMMAND GROUP
# ============================================================================


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
@click.version_option(__version__, prog_name=PROG)
def cli():
    """Dynamic block-sparse attention masks from structured pattern decomposition"""
    settings = load_settings()
    logging.basicConfig(
        level=settings.log_level,
        stream=sys.stderr,
        format="%(levelname)s %(name)s: %(message)s",
    )


@cli.command()
@click.version_option(__version__, prog_name=PROG)
@click.option("--in", "in_path", type=FILE, required=True, help="Attention map, N x N (CSV or .bin)")
@click.option("--block", type=click.IntRange(min=1), default=128, show_default=True, help="Block size B")
@click.option("--eta", type=click.FloatRange(min=0.0), default=1e-4, show_default=True, help="Sparsity threshold")
@click.option("--out", "out_path", type=FILE, required=True, help="Sparsity map, n x n")
def sparsify(in_path: Path, block: int, eta: float, out_path: Path):
    """Block sparsity: fraction of entries below eta in each B x B block"""
    values = read_matrix(in_path)
    _square(values, in_path)
    layout = make_layout(values.shape[0], block, 1)
    smap = attention_to_sparsity(AttentionMap(values), layout, eta)
    write_matrix(out_path, smap.values)
    logger.info("wrote %dx%d sparsity map to %s", layout.grid, layout.grid, out_path)


@cli.command()
@click.version_option(__version__, prog_name=PROG)
@click.option("--in", "in_path", type=FILE, required=True, help="Sparsity map, n x n")
@click.option("--frames", type=click.IntRange(min=1), default=1, show_default=True, help="Block-diagonal frames f")
@click.option("--lambda", "lam", type=click.FloatRange(min=0.0), default=1e-8, show_default=True, help="Tikhonov parameter")
@click.option("--out", "out_path", type=FILE, required=True, help="Intensity CSV")
def decompose(in_path: Path, frames: int, lam: float, out_path: Path):
    """Least-squares intensities of the diagonal, vertical and frame patterns"""
    values = read_matrix(in_path)
    _square(values, in_path)
    layout = make_layout(values.shape[0], 1, frames)
    smap = SparsityMap(values)
    x = solve_intensities(smap, layout, SolverConfig(lam=lam))
    try:
        error: Optional[float] = nae(smap, x, layout)
    except UndefinedMetricError:
        error = None
    write_intensities(out_path, x, layout, error)
    logger.info("decomposed n=%d via %s, NAE %s", layout.grid, x.solver_path, error)


@cli.command()
@click.version_option(__version__, prog_name=PROG)
@click.option("--intensities", type=FILE, required=True, help="Intensity CSV from decompose")
@click.option("--previous", type=FILE, default=None, help="Earlier intensity CSV for the frame decision")
@click.option("--topk", type=click.IntRange(min=1), default=200, show_default=True, help="Patterns kept")
@click.option("--tau-e", type=float, default=0.5, show_default=True, help="Frame preservation threshold")
@click.option("--frames", type=click.IntRange(min=1), default=None, help="Expected frame count")
@click.option(
    "--direction",
    type=click.Choice(["ascending", "descending"]),
    default="ascending",
    show_default=True,
    help="Ranking order of intensities",
)
@click.option("--out", "out_path", type=FILE, required=True, help="0/1 block mask CSV")
def mask(
    intensities: Path,
    previous: Optional[Path],
    topk: int,
    tau_e: float,
    frames: Optional[int],
    direction: str,
    out_path: Path,
):
    """Top-K block mask from an intensity vector"""
    x = read_intensities(intensities)
    if frames is not None and frames != x.frames:
        raise InputError(f"{intensities}: holds {x.frames} frame intensities, --frames says {frames}")
    layout = make_layout(x.grid, 1, x.frames)
    e_prev = x.e
    if previous is not None:
        prior = read_intensities(previous)
        prior.check_layout(layout)
        e_prev = prior.e
    preserve = block_diag_decision(e_prev, x.e, tau_e)
    block = build_block_mask(topk_patterns(x.c, x.d, topk, direction), preserve, layout)
    write_matrix(out_path, block.passes)


@cli.command()
@click.version_option(__version__, prog_name=PROG)
@click.option("--config", "config_path", type=FILE, required=True, help="INI run configuration")
@click.option("--out", "out_dir", type=click.Path(file_okay=False, path_type=Path), required=True, help="Output directory")
@click.option("--seed", type=click.IntRange(min=0), default=None, help="Override the trajectory seed")
@click.option("--dump-masks", is_flag=True, default=False, help="Write per-step block masks")
def simulate(config_path: Path, out_dir: Path, seed: Optional[int], dump_masks: bool):
    """Run the synthetic denoising loop and write trace.csv, summary.csv, config.json, cost.json"""
    setup = load_simulation_config(config_path, seed=seed)
    sim = setup.simulation
    if dump_masks:
        sim = sim.model_copy(update={"dump_masks": True})
    report = run_denoising(setup.schedule, setup.layout, setup.solver, setup.trajectory, sim.heads, sim)
    overall = report.summary()[-1]
    pass_fraction = 1.0 - (overall["mean_sparsity_ratio"] or 0.0)
    cost = cost_model(setup.layout, setup.schedule, pass_fraction)
    _write_run(report, cost.as_row(), out_dir)
    click.echo(f"{len(report.records)} trace rows written to {out_dir}")


def _write_run(report: TraceReport, cost: dict, out_dir: Path) -> None:
    """Stage every output in a temporary sibling directory, then move it into place"""
    out_dir.parent.mkdir(parents=True, exist_ok=True)
    staging = Path(tempfile.mkdtemp(prefix=f".{out_dir.name}.", dir=out_dir.parent))
    try:
        write_csv_rows(staging / "trace.csv", TRACE_COLUMNS, (r.as_row() for r in report.records))
        write_csv_rows(staging / "summary.csv", SUMMARY_COLUMNS, report.summary())
        (staging / "config.json").write_text(json.dumps(report.config, indent=2) + "\n")
        (staging / "cost.json").write_text(json.dumps(cost, indent=2) + "\n")
        for step, layer in report.masks.items():
            for block in layer:
                write_matrix(staging / "masks" / f"step{step:03d}_head{block.head}.csv", block.passes)

        if not out_dir.exists():
            os.replace(staging, out_dir)
            return
        for entry in staging.iterdir():
            target = out_dir / entry.name
            if target.is_dir():
                shutil.rmtree(target)
            os.replace(entry, target)
    finally:
        shutil.rmtree(staging, ignore_errors=True)


@cli.command()
@click.version_option(__version__, prog_name=PROG)
@click.option("--sizes", default="32,64,128,256", show_default=True, help="Comma-separated grid sizes n")
@click.option("--reps", type=click.IntRange(min=1), default=3, show_default=True, help="Repetitions per size")
@click.option("--frames", type=click.IntRange(min=1), default=1, show_default=True, help="Frames f (must divide every n)")
@click.option("--seed", type=click.IntRange(min=0), default=0, show_default=True, help="Random map seed")
@click.option("--lambda", "lam", type=click.FloatRange(min=0.0), default=1e-8, show_default=True, help="Tikhonov parameter")
@click.option("--out", "out_path", type=FILE, required=True, help="Timing CSV")
def bench(sizes: str, reps: int, frames: int, seed: int, lam: float, out_path: Path):
    """Structured versus explicit-matrix solve timings across grid sizes"""
    try:
        ns = [int(s) for s in sizes.split(",") if s.strip()]
    except ValueError:
        raise click.BadParameter(f"{sizes!r} is not a comma-separated list of integers", param_hint="--sizes")
    if not ns or min(ns) < 1:
        raise click.BadParameter("sizes must be positive integers", param_hint="--sizes")
    rows = run_bench(ns, frames=frames, reps=reps, seed=seed, lam=lam)
    write_csv_rows(out_path, BENCH_COLUMNS, (r.as_row() for r in rows))
    for line in scaling_report(rows):
        click.echo(line)


# ============================================================================
# ENTRY POINT
# ============================================================================


def dispatch(argv: Optional[Sequence[str]] = None) -> int:
    """Run one CLI invocation and map its outcome to an exit code"""
    args = list(sys.argv[1:] if argv is None else argv)
    try:
        rv = cli.main(args=args, prog_name=PROG, standalone_mode=False)
    except click.UsageError as e:
        e.show()
        return 1
    except click.ClickException as e:
        e.show()
        return 1
    except click.Abort:
        click.echo("aborted", err=True)
        return 1
    except ModError as e:
        click.echo(f"error: {e}", err=True)
        return e.exit_code
    except ValidationError as e:
        first = e.errors()[0]
        loc = ".".join(str(p) for p in first["loc"]) or "value"
        click.echo(f"error: {loc}: {first['msg']}", err=True)
        return InputError.exit_code
    return rv if isinstance(rv, int) else 0
