# ============================================================================
# FILE: config.py
# ============================================================================
"""
INI loader for `mod simulate`.

    [layout]      n_tokens, block_size, frames
    [schedule]    total_steps, warmup, interval
    [solver]      lambda, eta, tau_e, top_k, selection_direction
    [simulation]  heads, value_dim, force_main_diagonal, dump_masks
    [trajectory]  seed, background, noise_sigma, warmup_chaos, demo,
                  and one `<family>.<index> = step:value, step:value, ...`
                  line per pattern (0-based index)

With `demo = true` the trajectory starts from demo_trajectory and listed
patterns are added on top. Every section is optional; missing keys take
the model defaults.
"""

import configparser
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Optional

from pydantic import ValidationError

from src.core.basis import PatternFamily, check_pattern
from src.errors import ConfigError, ModError
from src.models import DenoisingSchedule, GridLayout, SolverConfig, make_layout
from src.sim.denoise import SimulationConfig
from src.sim.synthetic import PatternTrajectory, TrajectorySpec, demo_trajectory

_TRAJECTORY_SCALARS = {"seed", "background", "noise_sigma", "warmup_chaos", "demo"}


@dataclass(frozen=True)
class SimulationSetup:
    layout: GridLayout
    schedule: DenoisingSchedule
    solver: SolverConfig
    simulation: SimulationConfig
    trajectory: TrajectorySpec


def _section(parser: configparser.ConfigParser, name: str) -> dict[str, str]:
    return dict(parser[name]) if parser.has_section(name) else {}


def _knots(text: str, where: str) -> tuple[tuple[int, float], ...]:
    knots = []
    for item in text.split(","):
        try:
            step, value = item.split(":")
            knots.append((int(step), float(value)))
        except ValueError:
            raise ConfigError(f"{where}: bad knot {item.strip()!r}, expected step:value") from None
    return tuple(knots)


def _patterns(entries: dict[str, str], where: str) -> list[PatternTrajectory]:
    out = []
    for key, text in entries.items():
        if key in _TRAJECTORY_SCALARS:
            continue
        family_label, _, index = key.partition(".")
        if not index.isdigit():
            raise ConfigError(f"{where}: key {key!r} must look like <family>.<index>")
        out.append(
            PatternTrajectory(
                family=PatternFamily.from_label(family_label),
                index=int(index),
                knots=_knots(text, f"{where} [{key}]"),
            )
        )
    return out


def load_simulation_config(path: Path, seed: Optional[int] = None) -> SimulationSetup:
    """Parse and validate a simulate config; seed overrides [trajectory] seed"""
    path = Path(path)
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except OSError as e:
        raise ConfigError(f"{path}: cannot read config ({e.strerror})") from None
    except configparser.Error as e:
        raise ConfigError(f"{path}: {e.message}") from None

    try:
        lay = _section(parser, "layout")
        layout = make_layout(
            int(lay.get("n_tokens", 256)),
            int(lay.get("block_size", 8)),
            int(lay.get("frames", 4)),
        )
        schedule = DenoisingSchedule(**_section(parser, "schedule"))
        solver = SolverConfig(**_section(parser, "solver"))
        simulation = SimulationConfig(**_section(parser, "simulation"))

        traj = _section(parser, "trajectory")
        scalars: dict[str, Any] = {k: traj[k] for k in ("background", "noise_sigma", "warmup_chaos") if k in traj}
        scalars["seed"] = seed if seed is not None else traj.get("seed", 0)
        extra = _patterns(traj, str(path))
        for traj_line in extra:
            check_pattern(traj_line.pattern, layout)
        if parser.getboolean("trajectory", "demo", fallback=False):
            base = demo_trajectory(layout, total_steps=schedule.total_steps)
            trajectory = TrajectorySpec(**{**base.model_dump(), **scalars, "patterns": base.patterns + tuple(extra)})
        else:
            trajectory = TrajectorySpec(patterns=tuple(extra), **scalars)
    except ValidationError as e:
        first = e.errors()[0]
        loc = ".".join(str(p) for p in first["loc"]) or "value"
        raise ConfigError(f"{path}: {loc}: {first['msg']}") from None
    except ValueError as e:
        raise ConfigError(f"{path}: {e}") from None
    except ConfigError:
        raise
    except ModError as e:
        raise ConfigError(f"{path}: {e}") from None

    return SimulationSetup(
        layout=layout,
        schedule=schedule,
        solver=solver,
        simulation=simulation,
        trajectory=trajectory,
    )
