import numpy as np
import pytest

from coinbar.errors import BoundsError, ConfigError, UsageError
from coinbar.state import (
    CLAMPED, JointState, Trajectory, WorldParams, attendance, clamp, clamp_state,
    effect_set, full_set, unary,
)


def test_world_defaults():
    w = WorldParams()
    assert w.K == 7 and w.N == 168 and w.capacity == 6.0
    assert w.with_agents(42).N == 42 and w.with_agents(42).alpha == w.alpha


@pytest.mark.parametrize("kw", [dict(alpha=()), dict(alpha=(1, -1)), dict(capacity=0),
                                dict(N=0), dict(N=2.5), dict(alpha=(float("nan"),))])
def test_world_validation(kw):
    with pytest.raises(ConfigError):
        WorldParams(**kw)


def test_joint_state_is_immutable():
    s = JointState([0, 1, 1])
    with pytest.raises(ValueError):
        s.picks[0] = 2
    t = s.with_pick(0, 2)
    assert list(s.picks) == [0, 1, 1] and list(t.picks) == [2, 1, 1]
    assert s == JointState([0, 1, 1]) and hash(s) == hash(JointState([0, 1, 1]))


def test_joint_state_rejects_bad_picks():
    with pytest.raises(BoundsError):
        JointState([0, -2])
    with pytest.raises(ConfigError):
        JointState([])


def test_attendance_counts_and_clamped():
    w = WorldParams(alpha=(1, 1, 1), N=5)
    assert list(attendance(JointState([0, 2, 2, CLAMPED, 0]), w)) == [2, 0, 2]
    assert list(attendance(JointState([CLAMPED] * 5), w)) == [0, 0, 0]


def test_attendance_errors():
    w = WorldParams(alpha=(1, 1), N=3)
    with pytest.raises(ConfigError):
        attendance(JointState([0, 1]), w)
    with pytest.raises(BoundsError):
        attendance(JointState([0, 1, 2]), w)


def test_unary():
    u = unary([1, CLAMPED, 0], 3)
    assert u.tolist() == [[0, 1, 0], [0, 0, 0], [1, 0, 0]]


def test_trajectory_roundtrip():
    states = [JointState([0, 1], 0), JointState([1, 1], 1)]
    tr = Trajectory.from_states(states)
    assert tr.T == 2 and tr.N == 2
    assert tr[1] == states[1]
    assert tr.concat(tr).T == 4
    with pytest.raises(ConfigError):
        Trajectory.from_states([JointState([0], 1)])
    with pytest.raises(UsageError):
        Trajectory.from_states([])


def test_clamp_effect_set_and_bounds():
    tr = Trajectory(np.array([[0, 1, 2], [2, 1, 0]]))
    c = clamp(tr, effect_set(1, 2))
    assert c.picks[:, 1].tolist() == [CLAMPED, CLAMPED]
    assert c.picks[:, [0, 2]].tolist() == [[0, 2], [2, 0]]
    assert tr.picks[0, 1] == 1
    assert clamp(tr, []) is tr
    assert (clamp(tr, full_set(3, 2)).picks == CLAMPED).all()
    with pytest.raises(BoundsError):
        clamp(tr, [(3, 0)])
    with pytest.raises(BoundsError):
        clamp(tr, [(0, 2)])


def test_clamp_state():
    s = JointState([0, 1, 2], 4)
    c = clamp_state(s, [0, 2])
    assert c.picks.tolist() == [CLAMPED, 1, CLAMPED] and c.week == 4
    with pytest.raises(BoundsError):
        clamp_state(s, [5])
