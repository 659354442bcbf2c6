import numpy as np
import pytest

from src.core.basis import (
    PatternFamily,
    PatternId,
    all_patterns,
    design_matrix_bytes,
    materialize_design_matrix,
    offset,
    support,
    support_mask,
)
from src.errors import DesignMatrixTooLarge, PatternIndexError
from tests.helpers import design, grid_layout

PD = PatternFamily.PARALLEL_DIAGONAL
V = PatternFamily.VERTICAL
BD = PatternFamily.BLOCK_DIAGONAL


def test_main_diagonal_support():
    assert support(PatternId(PD, 3), grid_layout(4)) == {(0, 0), (1, 1), (2, 2), (3, 3)}


def test_vertical_support_is_a_column():
    assert support(PatternId(V, 1), grid_layout(4)) == {(0, 1), (1, 1), (2, 1), (3, 1)}


def test_block_diagonal_support_is_a_frame_square():
    assert support(PatternId(BD, 1), grid_layout(4, 2)) == {(2, 2), (2, 3), (3, 2), (3, 3)}


def test_offsets():
    layout = grid_layout(4)
    assert offset(PatternId(PD, 0), layout) == -3
    assert offset(PatternId(PD, 6), layout) == 3
    assert offset(PatternId(V, 0), layout) is None


@pytest.mark.parametrize("pid", [PatternId(PD, 7), PatternId(V, 4), PatternId(BD, 2), PatternId(V, -1)])
def test_out_of_range_index_rejected(pid):
    with pytest.raises(PatternIndexError):
        support_mask(pid, grid_layout(4, 2))


def test_support_sizes():
    layout = grid_layout(6, 3)
    for pid in all_patterns(layout):
        size = int(support_mask(pid, layout).sum())
        if pid.family is PD:
            assert size == 6 - abs(offset(pid, layout))
        elif pid.family is V:
            assert size == 6
        else:
            assert size == 4


@pytest.mark.parametrize("family", list(PatternFamily))
def test_supports_within_a_family_are_disjoint(family):
    layout = grid_layout(6, 3)
    masks = [support_mask(p, layout) for p in all_patterns(layout) if p.family is family]
    assert np.sum(masks, axis=0).max() == 1


def test_family_labels_round_trip():
    assert PatternFamily.from_label("Vertical") is V
    assert str(PatternId(PD, 3)) == "parallel_diagonal[3]"
    with pytest.raises(PatternIndexError):
        PatternFamily.from_label("horizontal")


def test_design_matrix_column_sums():
    m = design(2, 1)
    assert m.shape == (4, 6)
    np.testing.assert_array_equal(m.sum(axis=0), [1, 2, 1, 2, 2, 4])


def test_design_matrix_on_single_block():
    np.testing.assert_array_equal(design(1, 1), np.ones((1, 3)))


def test_design_matrix_is_rank_deficient():
    assert np.linalg.matrix_rank(design(4, 2)) < 13


def test_design_columns_are_row_major():
    layout = grid_layout(5)
    m = materialize_design_matrix(layout)
    for col, pid in enumerate(all_patterns(layout)):
        np.testing.assert_array_equal(m[:, col].reshape(5, 5), support_mask(pid, layout))


def test_design_matrix_cap(clean_env):
    layout = grid_layout(8, 2)
    with pytest.raises(DesignMatrixTooLarge, match=str(design_matrix_bytes(layout))):
        materialize_design_matrix(layout, max_bytes=100)
    clean_env.setenv("MOD_MAX_DESIGN_BYTES", "100")
    with pytest.raises(DesignMatrixTooLarge):
        materialize_design_matrix(layout)
