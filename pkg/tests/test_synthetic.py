import numpy as np
import pytest
from pydantic import ValidationError

from src.core.basis import PatternFamily, check_pattern
from src.core.predictor import linearity_error, predict_window
from src.core.reconstruct import der
from src.core.sparsify import attention_to_sparsity
from src.errors import ConfigError
from src.models import IntensityVector, make_layout
from src.sim.synthetic import (
    PatternTrajectory,
    TrajectorySpec,
    demo_trajectory,
    lift_to_attention,
    synth_attention,
    target_sparsity,
)

V = PatternFamily.VERTICAL
PD = PatternFamily.PARALLEL_DIAGONAL


def _column_cleared(layout):
    return TrajectorySpec(
        patterns=(PatternTrajectory(family=V, index=1, knots=((1, -1.0),)),),
        background=1.0,
    )


def test_value_at_interpolates_and_holds():
    traj = PatternTrajectory(family=PD, index=0, knots=((10, 0.0), (20, 1.0)))
    assert traj.value_at(15) == pytest.approx(0.5)
    assert traj.value_at(1) == 0.0
    assert traj.value_at(40) == 1.0


@pytest.mark.parametrize("knots", [((5, 0.1), (5, 0.2)), ((5, 0.1), (3, 0.2)), ((1, float("nan")),), ()])
def test_bad_knots_rejected(knots):
    with pytest.raises(ValidationError):
        PatternTrajectory(family=PD, index=0, knots=knots)


def test_target_respects_block_ceilings():
    layout = make_layout(32, 4, 2)
    target = target_sparsity(_column_cleared(layout), layout, 1).values
    assert not target[:, 1].any()
    off_diagonal = ~np.eye(8, dtype=bool)
    off_diagonal[:, 1] = False
    np.testing.assert_array_equal(target[off_diagonal], 1 - 1 / 16)
    diagonal = np.diagonal(target)
    np.testing.assert_array_equal(np.delete(diagonal, 1), 1 - 1 / 4)


def test_lifted_map_sparsifies_back_to_target():
    layout = make_layout(32, 4, 2)
    spec = _column_cleared(layout)
    target = target_sparsity(spec, layout, 1)
    attention = lift_to_attention(target, layout, eta=1e-4)
    np.testing.assert_array_equal(attention_to_sparsity(attention, layout, 1e-4).values, target.values)


def test_lifted_rows_are_distributions_with_informative_entries():
    layout = make_layout(32, 4, 2)
    attention = synth_attention(_column_cleared(layout), layout, 1, eta=1e-4).values
    np.testing.assert_allclose(attention.sum(axis=1), 1.0)
    assert np.all(attention.max(axis=1) >= 10 * 1e-4)


def test_demo_round_trip_at_every_step():
    layout = make_layout(64, 4, 4)
    spec = demo_trajectory(layout, seed=3)
    for t in (1, 12, 30, 50):
        target = target_sparsity(spec, layout, t, head=1)
        recovered = attention_to_sparsity(lift_to_attention(target, layout), layout, 1e-4)
        np.testing.assert_array_equal(recovered.values, target.values)
        np.testing.assert_array_equal(np.rint(target.values * 16), target.values * 16)


def test_maps_are_pure_functions_of_their_arguments():
    layout = make_layout(64, 4, 4)
    spec = demo_trajectory(layout, seed=5)
    a = target_sparsity(spec, layout, 7, head=2).values
    np.testing.assert_array_equal(a, target_sparsity(spec, layout, 7, head=2).values)
    assert not np.array_equal(a, target_sparsity(spec, layout, 7, head=3).values)


def test_chaos_only_during_warmup():
    layout = make_layout(64, 4, 4)
    spec = TrajectorySpec(background=0.5, warmup_chaos=0.1, chaos_steps=12)
    assert not np.array_equal(target_sparsity(spec, layout, 1).values, target_sparsity(spec, layout, 2).values)
    np.testing.assert_array_equal(target_sparsity(spec, layout, 13).values, target_sparsity(spec, layout, 30).values)


def test_demo_patterns_fit_the_layout():
    layout = make_layout(256, 8, 4)
    spec = demo_trajectory(layout)
    for traj in spec.patterns:
        check_pattern(traj.pattern, layout)
    families = [t.family for t in spec.patterns]
    assert families.count(PatternFamily.BLOCK_DIAGONAL) == 4
    assert families.count(V) == 3


def test_lift_rejects_too_many_tokens_for_eta():
    layout = make_layout(2048, 8, 1)
    spec = TrajectorySpec(background=0.5)
    with pytest.raises(ConfigError, match="2048"):
        synth_attention(spec, layout, 1, eta=1e-3)


@pytest.mark.parametrize("total_steps", [2, 10, 16, 50])
def test_demo_trajectory_builds_for_short_schedules(total_steps):
    spec = demo_trajectory(make_layout(64, 8, 2), total_steps=total_steps)
    main = spec.patterns[0]
    assert main.index == 7
    steps = [s for s, _ in main.knots]
    assert steps == sorted(set(steps))


def test_warmup_chaos_raises_step_to_step_drift():
    layout = make_layout(64, 4, 4)
    calm = demo_trajectory(layout, noise_sigma=0.0, warmup_chaos=0.0)
    chaotic = demo_trajectory(layout, noise_sigma=0.0, warmup_chaos=0.05)
    for t in range(1, 12):
        baseline = der(target_sparsity(calm, layout, t + 1), target_sparsity(calm, layout, t))
        shaken = der(target_sparsity(chaotic, layout, t + 1), target_sparsity(chaotic, layout, t))
        assert shaken > baseline


def _intensities(trajectories, layout, t):
    """Intensity vector holding each trajectory's value at step t"""
    x = np.zeros(layout.pool_size)
    for traj in trajectories:
        offset = 0 if traj.family is PD else layout.n_diagonals
        x[offset + traj.index] = traj.value_at(t)
    return IntensityVector.from_flat(x, layout, step=t)


def test_windows_after_mild_slope_changes_stay_linear():
    layout = make_layout(4, 1, 2)
    # slopes change by under 10% at every prediction step
    rising = PatternTrajectory(family=PD, index=3, knots=((1, 0.1), (22, 0.31), (32, 0.42), (42, 0.525), (50, 0.617)))
    falling = PatternTrajectory(family=V, index=1, knots=((1, 0.9), (22, 0.48), (32, 0.29), (42, 0.085), (50, -0.067)))
    windows = ((11, 12, 22), (12, 22, 32), (22, 32, 42), (32, 42, 50))

    for t_prev, t_curr, stop in windows:
        window = predict_window(
            _intensities((rising, falling), layout, t_prev),
            _intensities((rising, falling), layout, t_curr),
            range(t_curr + 1, stop + 1),
        )
        steps = [p.step for p in window]
        for traj, predicted in ((rising, [p.c[3] for p in window]), (falling, [p.d[1] for p in window])):
            actual = [traj.value_at(t) for t in steps]
            error = linearity_error(np.array(actual), np.array(predicted))
            assert error < 0.1
            if t_curr == 12:
                assert error == pytest.approx(0.0, abs=1e-12)
            else:
                assert error > 0.0
