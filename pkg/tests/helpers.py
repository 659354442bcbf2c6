import numpy as np

from src.core.basis import materialize_design_matrix
from src.models import GridLayout, SparsityMap, make_layout


def grid_layout(n: int, frames: int = 1) -> GridLayout:
    """Block-level layout: one token per block, so N = n"""
    return make_layout(n, 1, frames)


def random_map(rng: np.random.Generator, n: int, step: int = 0) -> SparsityMap:
    return SparsityMap(rng.uniform(size=(n, n)), step=step)


def design(n: int, frames: int = 1) -> np.ndarray:
    return materialize_design_matrix(grid_layout(n, frames), max_bytes=1 << 30)
