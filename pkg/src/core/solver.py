# ============================================================================
# FILE: solver.py
# ============================================================================
"""
Least-squares decomposition of a sparsity map onto the pattern bases.

The normal matrix M^T M + lambda I is assembled analytically from support
intersection counts, so M itself is never built on the structured path.
dense_oracle_solve is the explicit-M reference every solver test compares to.
"""

import logging
import warnings
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np
from scipy.linalg import (
    LinAlgError,
    LinAlgWarning,
    cho_factor,
    cho_solve,
    lstsq,
    lu_factor,
    lu_solve,
    null_space,
    pinv,
)

from src.core.basis import materialize_design_matrix
from src.errors import DimensionError, SolverError, UndefinedMetricError
from src.models import GridLayout, IntensityVector, SolverConfig, SparsityMap

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class NormalSystem:
    """Regularized normal equations (M^T M + lambda I) x = M^T vec(S)"""

    gram: np.ndarray
    rhs: np.ndarray


# ============================================================================
# ANALYTIC ASSEMBLY
# ============================================================================


def _offsets(layout: GridLayout) -> np.ndarray:
    n = layout.grid
    return np.arange(2 * n - 1) - (n - 1)


def _diagonal_index(n: int) -> np.ndarray:
    """(i, j) -> ParallelDiagonal index whose offset is j - i"""
    rows, cols = np.indices((n, n))
    return cols - rows + (n - 1)


def assemble_normal_matrix(layout: GridLayout, lam: float = 0.0) -> np.ndarray:
    n, f, s = layout.grid, layout.frames, layout.blocks_per_frame
    delta = _offsets(layout)
    cols = np.arange(n)
    frame_of_col = cols // s

    cc = np.diag((n - np.abs(delta)).astype(float))
    dd = n * np.eye(n)
    ee = s * s * np.eye(f)

    shifted = cols[None, :] - delta[:, None]
    cd = ((shifted >= 0) & (shifted <= n - 1)).astype(float)
    # every frame square sits on the main diagonal, so the count is frame-independent
    ce = np.repeat(np.maximum(0, s - np.abs(delta))[:, None], f, axis=1).astype(float)
    de = s * (frame_of_col[:, None] == np.arange(f)[None, :]).astype(float)

    gram = np.block(
        [
            [cc, cd, ce],
            [cd.T, dd, de],
            [ce.T, de.T, ee],
        ]
    )
    if lam:
        gram += lam * np.eye(gram.shape[0])
    return gram


def assemble_rhs(map: SparsityMap, layout: GridLayout) -> np.ndarray:
    """M^T vec(S) from diagonal sums, column sums and frame-square sums"""
    n, f, s = layout.grid, layout.frames, layout.blocks_per_frame
    if map.side != n:
        raise DimensionError(f"sparsity map side {map.side} does not match grid {n}")
    values = map.values
    c_part = np.bincount(
        _diagonal_index(n).ravel(), weights=values.ravel(), minlength=layout.n_diagonals
    )
    d_part = values.sum(axis=0)
    e_part = np.diagonal(values.reshape(f, s, f, s).sum(axis=(1, 3))).copy()
    return np.concatenate([c_part, d_part, e_part])


def assemble_system(map: SparsityMap, layout: GridLayout, lam: float) -> NormalSystem:
    return NormalSystem(gram=assemble_normal_matrix(layout, lam), rhs=assemble_rhs(map, layout))


@lru_cache(maxsize=32)
def null_basis(layout: GridLayout) -> np.ndarray:
    """Orthonormal basis of null(M^T M); columns, possibly zero of them"""
    basis = null_space(assemble_normal_matrix(layout, 0.0))
    logger.debug("null space of n=%d f=%d has dimension %d", layout.grid, layout.frames, basis.shape[1])
    basis.setflags(write=False)
    return basis


# ============================================================================
# SOLVE
# ============================================================================


def solve_normal_system(gram: np.ndarray, rhs: np.ndarray, singular: bool = False) -> tuple[np.ndarray, str]:
    """Cholesky, then pivoted LU, then pseudoinverse; returns (x, path)

    singular=True goes straight to the pseudoinverse; factorizations of an
    exactly singular matrix can return without raising.
    """
    failures: list[str] = []
    if singular:
        return _pinv_solve(gram, rhs, ["singular matrix"])

    try:
        x = cho_solve(cho_factor(gram, lower=True), rhs)
        if np.all(np.isfinite(x)):
            return x, "cholesky"
        failures.append("cholesky: non-finite solution")
    except (LinAlgError, ValueError) as e:
        failures.append(f"cholesky: {e}")
    logger.warning("Cholesky failed (%s), falling back to LU", failures[-1])

    try:
        with warnings.catch_warnings():
            warnings.simplefilter("error", LinAlgWarning)
            x = lu_solve(lu_factor(gram), rhs)
        if np.all(np.isfinite(x)):
            return x, "lu"
        failures.append("lu: non-finite solution")
    except (LinAlgError, LinAlgWarning, ValueError) as e:
        failures.append(f"lu: {e}")
    logger.warning("LU failed (%s), falling back to pseudoinverse", failures[-1])
    return _pinv_solve(gram, rhs, failures)


def _pinv_solve(gram: np.ndarray, rhs: np.ndarray, failures: list[str]) -> tuple[np.ndarray, str]:
    try:
        # default cutoff: max(shape) * eps * largest singular value
        x = pinv(gram) @ rhs
        if np.all(np.isfinite(x)):
            return x, "pinv"
        failures.append("pinv: non-finite solution")
    except (LinAlgError, ValueError) as e:
        failures.append(f"pinv: {e}")

    raise SolverError("all solve paths failed: " + "; ".join(failures))


def solve_intensities(map: SparsityMap, layout: GridLayout, cfg: Optional[SolverConfig] = None) -> IntensityVector:
    """Regularized least-squares intensities of S on the structured basis"""
    cfg = cfg or SolverConfig()
    system = assemble_system(map, layout, cfg.lam)
    basis = null_basis(layout)
    x, path = solve_normal_system(system.gram, system.rhs, singular=cfg.lam == 0 and basis.shape[1] > 0)

    # the minimizer lies in range(M^T M); drop rounding noise along the null space
    if basis.shape[1]:
        x = x - basis @ (basis.T @ x)

    logger.debug("step %d solved via %s", map.step, path)
    return IntensityVector.from_flat(x, layout, step=map.step, solver_path=path)


def dense_oracle_solve(
    map: SparsityMap,
    layout: GridLayout,
    lam: float = 1e-8,
    max_bytes: Optional[int] = None,
) -> IntensityVector:
    """Reference solution from the explicit design matrix via SVD least squares"""
    m = materialize_design_matrix(layout, max_bytes=max_bytes)
    s = map.values.ravel()
    if lam > 0:
        p = m.shape[1]
        a = np.vstack([m, np.sqrt(lam) * np.eye(p)])
        b = np.concatenate([s, np.zeros(p)])
    else:
        a, b = m, s
    x, *_ = lstsq(a, b, lapack_driver="gelsd")
    return IntensityVector.from_flat(x, layout, step=map.step, solver_path="oracle")


# ============================================================================
# RESIDUALS
# ============================================================================


def reconstruct_map(x: IntensityVector, layout: GridLayout) -> np.ndarray:
    """sum c_k C_k + sum d_k D_k + sum e_k E_k as an n x n array"""
    x.check_layout(layout)
    n, s = layout.grid, layout.blocks_per_frame
    out = x.c[_diagonal_index(n)] + x.d[None, :]
    frame = np.arange(n) // s
    same_frame = frame[:, None] == frame[None, :]
    out += np.where(same_frame, x.e[frame][:, None], 0.0)
    return out


def nae(map: SparsityMap, x: IntensityVector, layout: GridLayout) -> float:
    """Normalized approximation error ||S - MX||_F / ||S||_F"""
    norm = np.linalg.norm(map.values)
    if norm == 0.0:
        raise UndefinedMetricError("NAE undefined for an all-zero sparsity map")
    return float(np.linalg.norm(map.values - reconstruct_map(x, layout)) / norm)


# ============================================================================
# OPERATION COUNTS
# ============================================================================


def structured_flops(layout: GridLayout) -> int:
    """Floating-point operations of one structured solve (null basis amortized)"""
    n, p = layout.grid, layout.pool_size
    assembly = p * p
    rhs = 3 * n * n
    factor = p**3 // 3
    triangular = 2 * p * p
    projection = 4 * p
    return assembly + rhs + factor + triangular + projection


def oracle_flops(layout: GridLayout) -> int:
    """Operations of the explicit path: build M, then SVD least squares on [M; sqrt(lam) I]"""
    n, p = layout.grid, layout.pool_size
    rows = n * n + p
    return rows * p + 4 * rows * p * p + 8 * p**3
