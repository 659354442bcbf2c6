import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from src.core.sparsify import attention_to_sparsity
from src.errors import DimensionError
from src.models import AttentionMap, make_layout


def test_all_zero_map_is_fully_sparse():
    out = attention_to_sparsity(AttentionMap(np.zeros((256, 256))), make_layout(256, 128, 1), 1e-4)
    np.testing.assert_array_equal(out.values, np.ones((2, 2)))


def test_all_ones_map_has_no_sparsity():
    out = attention_to_sparsity(AttentionMap(np.ones((256, 256))), make_layout(256, 128, 1), 1e-4)
    np.testing.assert_array_equal(out.values, np.zeros((2, 2)))


def test_counts_entries_below_eta_per_block():
    a = np.full((4, 4), 0.5)
    a[0, 0] = 0.0
    a[0, 1] = 0.0
    out = attention_to_sparsity(AttentionMap(a, step=7), make_layout(4, 2, 1), 1e-4)
    np.testing.assert_array_equal(out.values, [[0.5, 0.0], [0.0, 0.0]])
    assert out.step == 7


def test_entry_equal_to_eta_is_informative():
    out = attention_to_sparsity(AttentionMap(np.full((2, 2), 1e-4)), make_layout(2, 2, 1), 1e-4)
    assert out.values[0, 0] == 0.0


def test_dimension_mismatch_is_rejected():
    with pytest.raises(DimensionError):
        attention_to_sparsity(AttentionMap(np.zeros((4, 4))), make_layout(8, 2, 1), 1e-4)


@given(
    seed=st.integers(0, 2**32 - 1),
    eta_a=st.floats(0.0, 1.0),
    eta_b=st.floats(0.0, 1.0),
)
def test_monotone_in_eta(seed, eta_a, eta_b):
    lo, hi = sorted((eta_a, eta_b))
    a = AttentionMap(np.random.default_rng(seed).uniform(size=(8, 8)) ** 4)
    layout = make_layout(8, 2, 1)
    assert np.all(attention_to_sparsity(a, layout, lo).values <= attention_to_sparsity(a, layout, hi).values)


@given(seed=st.integers(0, 2**32 - 1), gamma=st.floats(1.0, 100.0))
def test_scaling_up_never_increases_sparsity(seed, gamma):
    values = np.random.default_rng(seed).uniform(0.0, 2e-4, size=(8, 8))
    layout = make_layout(8, 4, 1)
    base = attention_to_sparsity(AttentionMap(values), layout, 1e-4).values
    scaled = attention_to_sparsity(AttentionMap(gamma * values), layout, 1e-4).values
    assert np.all(scaled <= base)
