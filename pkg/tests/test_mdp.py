import math

import pytest
from hypothesis import given, settings, strategies as st

from pmcts import envs
from pmcts.mdp import Trajectory, discounted_return, suffix_return


def make_traj(rewards, gamma_states=None):
    traj = Trajectory()
    for i, r in enumerate(rewards):
        traj.append(i, 0, r, i + 1)
    return traj


def test_discounted_return_hand_case():
    traj = make_traj([1.0, -0.5, 2.0])
    g = 0.9
    expected = 1.0 + g * (-0.5) + g * g * 2.0 + g ** 3 * 0.25
    assert discounted_return(traj, 0.25, g) == pytest.approx(expected, rel=1e-14)


def test_empty_trajectory_returns_bootstrap():
    traj = Trajectory(leaf_state=3)
    assert discounted_return(traj, 0.7, 0.9) == 0.7
    assert suffix_return(traj, 0, 0.7, 0.9) == 0.7


def test_suffix_return_full_matches_discounted_return():
    traj = make_traj([0.3, -1.0, 0.5, 0.1])
    assert suffix_return(traj, 0, 0.2, 0.95) == discounted_return(traj, 0.2, 0.95)


def test_suffix_return_out_of_range():
    traj = make_traj([1.0])
    with pytest.raises(IndexError):
        suffix_return(traj, 2, 0.0, 0.9)
    with pytest.raises(IndexError):
        suffix_return(traj, -1, 0.0, 0.9)


@given(st.lists(st.floats(-5, 5), min_size=1, max_size=12),
       st.floats(0.1, 1.0), st.floats(-2, 2))
@settings(max_examples=60, deadline=None)
def test_bellman_decomposition_along_path(rewards, gamma, bootstrap):
    traj = make_traj(rewards)
    lhs = suffix_return(traj, 0, bootstrap, gamma) - rewards[0]
    rhs = gamma * suffix_return(traj, 1, bootstrap, gamma)
    assert lhs == pytest.approx(rhs, rel=1e-9, abs=1e-9)


@given(st.lists(st.floats(-5, 5), min_size=0, max_size=10),
       st.floats(0.1, 1.0), st.floats(-3, 3), st.floats(-3, 3))
@settings(max_examples=60, deadline=None)
def test_return_linear_in_bootstrap(rewards, gamma, b1, b2):
    traj = make_traj(rewards)
    r1 = discounted_return(traj, b1, gamma)
    r2 = discounted_return(traj, b2, gamma)
    slope = gamma ** traj.depth
    assert r1 - r2 == pytest.approx(slope * (b1 - b2), rel=1e-9, abs=1e-9)


def test_trajectory_validate_against_model():
    model = envs.CliffGrid()
    traj = Trajectory()
    s = model.initial_state
    for a in (0, 1):
        nxt, r, _ = model.transition(s, a)
        traj.append(s, a, r, nxt)
        s = nxt
    traj.validate(model)

    bad = Trajectory()
    bad.append(model.initial_state, 0, 99.0, 4)
    with pytest.raises(ValueError):
        bad.validate(model)


def test_max_action_count_uses_declared_width():
    assert envs.CliffGrid().max_action_count() == 4
    assert envs.RandomMdp(action_count=5).max_action_count() == 5
    assert envs.TicTacToe().max_action_count() == 9
