import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st
from pydantic import ValidationError

from src.errors import DimensionError, InputError, LayoutError
from src.models import (
    AttentionMap,
    BlockMask,
    DenoisingSchedule,
    IntensityVector,
    SolverConfig,
    SparsityMap,
    make_layout,
)

# ============================================================================
# LAYOUT
# ============================================================================


def test_make_layout_derives_grid_and_frames():
    layout = make_layout(512, 128, 2)
    assert layout.grid == 4
    assert layout.blocks_per_frame == 2


def test_make_layout_single_block():
    layout = make_layout(128, 128, 1)
    assert layout.grid == 1
    assert layout.blocks_per_frame == 1


def test_make_layout_rejects_non_dividing_block():
    with pytest.raises(LayoutError, match="128.*100"):
        make_layout(100, 128, 1)


def test_make_layout_rejects_non_dividing_frames():
    with pytest.raises(LayoutError, match="frames 3"):
        make_layout(512, 128, 3)


def test_make_layout_rejects_non_positive():
    with pytest.raises(LayoutError):
        make_layout(0, 1, 1)


def test_layout_is_frozen_and_hashable():
    layout = make_layout(64, 8, 2)
    assert hash(layout) == hash(make_layout(64, 8, 2))
    with pytest.raises(ValidationError):
        layout.grid = 3


@given(n=st.integers(1, 24), f=st.integers(1, 24))
def test_pool_size_matches_flattened_intensities(n, f):
    assume(n % f == 0)
    layout = make_layout(n, 1, f)
    x = np.arange(layout.pool_size, dtype=float)
    iv = IntensityVector.from_flat(x, layout)
    assert len(iv.flatten()) == (2 * n - 1) + n + f
    np.testing.assert_array_equal(iv.flatten(), x)


def test_from_flat_rejects_wrong_length():
    with pytest.raises(DimensionError):
        IntensityVector.from_flat(np.zeros(5), make_layout(4, 1, 2))


def test_intensity_vector_checks_lengths():
    with pytest.raises(DimensionError):
        IntensityVector(c=np.zeros(4), d=np.zeros(4), e=np.zeros(1))


def test_intensity_vector_check_layout():
    iv = IntensityVector.from_flat(np.zeros(13), make_layout(4, 1, 2))
    with pytest.raises(DimensionError):
        iv.check_layout(make_layout(4, 1, 1))


# ============================================================================
# SCHEDULE AND SOLVER CONFIG
# ============================================================================


def test_default_schedule_prediction_steps():
    schedule = DenoisingSchedule()
    assert schedule.prediction_steps == (12, 22, 32, 42)


@given(m=st.integers(2, 40), dt=st.integers(1, 15), extra=st.integers(1, 40))
def test_prediction_steps_start_at_warmup_and_increase(m, dt, extra):
    schedule = DenoisingSchedule(total_steps=m + extra, warmup=m, interval=dt)
    steps = schedule.prediction_steps
    assert steps[0] == m
    assert all(b > a for a, b in zip(steps, steps[1:]))
    assert steps[-1] <= schedule.total_steps


def test_interval_past_schedule_leaves_single_prediction():
    assert DenoisingSchedule(total_steps=20, warmup=12, interval=50).prediction_steps == (12,)


@pytest.mark.parametrize("kwargs", [{"warmup": 1}, {"warmup": 50}, {"interval": 0}])
def test_schedule_rejects_bad_values(kwargs):
    with pytest.raises(ValidationError):
        DenoisingSchedule(**kwargs)


def test_solver_config_accepts_lambda_alias():
    cfg = SolverConfig(**{"lambda": 1e-6})
    assert cfg.lam == 1e-6
    assert cfg.model_dump(by_alias=True)["lambda"] == 1e-6


@pytest.mark.parametrize("kwargs", [{"lam": -1.0}, {"eta": -1e-4}, {"top_k": 0}, {"selection_direction": "up"}])
def test_solver_config_rejects_bad_values(kwargs):
    with pytest.raises(ValidationError):
        SolverConfig(**kwargs)


# ============================================================================
# ARRAY PAYLOADS
# ============================================================================


def test_sparsity_map_range_is_enforced():
    with pytest.raises(InputError):
        SparsityMap(np.array([[0.5, 1.5], [0.0, 0.0]]))


def test_attention_map_must_be_square():
    with pytest.raises(DimensionError):
        AttentionMap(np.zeros((2, 3)))


def test_payloads_are_read_only_copies():
    source = np.zeros((2, 2))
    smap = SparsityMap(source, step=3)
    source[0, 0] = 1.0
    assert smap.values[0, 0] == 0.0
    with pytest.raises(ValueError):
        smap.values[0, 0] = 1.0


def test_block_mask_coerces_to_bool():
    mask = BlockMask(np.eye(3), step=4, head=1)
    assert mask.passes.dtype == bool
    assert mask.side == 3
