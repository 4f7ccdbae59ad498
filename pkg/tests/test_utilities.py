import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from coinbar.errors import BoundsError, UndefinedRewardError, UsageError
from coinbar.state import CLAMPED, JointState, Trajectory, WorldParams, clamp, effect_set
from coinbar.utilities import (
    PhiKind, RewardKind, batch_counts, batch_rewards, minority_reward, night_rewards, phi,
    phi_table, reward, ud_reward, wl_reward, wl_reward_analytic, world_reward, world_utility, wlu,
)

from conftest import G_ref, phi_ref


def test_phi_values():
    w = WorldParams()
    assert phi(0, 6, w) == pytest.approx(6 / math.e, rel=1e-15)
    assert phi(0, 0, w) == 0.0
    w1 = WorldParams(alpha=(0, 0, 0, 7, 0, 0, 0))
    assert phi(3, 6, w1) == pytest.approx(42 / math.e, rel=1e-15)
    assert phi(0, 6, w1) == 0.0


def test_phi_errors():
    w = WorldParams()
    with pytest.raises(BoundsError):
        phi(7, 1, w)
    with pytest.raises(UsageError):
        phi(0, -1, w)
    with pytest.raises(UsageError):
        phi(0, 1, w, PhiKind.MINORITY)


def test_phi_table_agrees_with_formula():
    w = WorldParams(alpha=(1.0, 3.5), capacity=4.0, N=40)
    tab = phi_table(w)
    assert tab.shape == (2, 42)
    for k in range(2):
        for y in range(42):
            assert tab[k, y] == pytest.approx(phi_ref(w.alpha[k], y, 4.0), rel=1e-14, abs=1e-300)
    assert not tab.flags.writeable


def test_kind_parsing():
    assert RewardKind.parse("wl") is RewardKind.WL
    assert RewardKind.parse("wonderful-life") is RewardKind.WL
    assert RewardKind.parse("world") is RewardKind.G
    assert PhiKind.parse("Minority") is PhiKind.MINORITY
    with pytest.raises(UsageError):
        RewardKind.parse("xx")


def test_world_reward_reference(rng):
    w = WorldParams(N=30)
    for _ in range(20):
        picks = rng.integers(0, 7, 30)
        assert world_reward(JointState(picks), w) == pytest.approx(G_ref(picks, w.alpha), rel=1e-13)


def test_known_profiles():
    w = WorldParams()
    s = JointState(np.repeat(np.arange(7), [6, 6, 6, 6, 6, 6, 132]))
    assert world_reward(s, w) == pytest.approx(6 * 6 / math.e + 132 * math.exp(-22), rel=1e-13)


def test_minority():
    assert minority_reward([3, 1, 1]).tolist() == [0, 1, 0]
    w = WorldParams(alpha=(1, 1, 1), N=5)
    assert world_reward(JointState([0, 0, 1, 1, 1]), w, PhiKind.MINORITY) == 0.0
    assert world_reward(JointState([0, 0, 1, 2, 2]), w, PhiKind.MINORITY) == 1.0


def test_ud_and_wl_single_cases():
    w = WorldParams(alpha=(1, 2), N=3)
    s = JointState([0, 1, 1])
    assert ud_reward(1, s, w) == pytest.approx(phi_ref(2, 2) / 2)
    assert wl_reward(1, s, w) == pytest.approx(phi_ref(2, 2) - phi_ref(2, 1), rel=1e-12)
    with pytest.raises(UndefinedRewardError):
        ud_reward(0, JointState([CLAMPED, 1, 1]), w)
    assert wl_reward_analytic(0, JointState([CLAMPED, 1, 1]), w) == 0.0


def profiles(N_max=40, K=7):
    return st.integers(1, N_max).flatmap(
        lambda n: st.lists(st.integers(0, K - 1), min_size=n, max_size=n))


@settings(max_examples=60, deadline=None)
@given(profiles())
def test_ud_rewards_sum_to_world_reward(picks):
    w = WorldParams(N=len(picks))
    s = JointState(picks)
    total = sum(ud_reward(i, s, w) for i in range(len(picks)))
    assert abs(total - world_reward(s, w)) <= 1e-9


@settings(max_examples=60, deadline=None)
@given(profiles(), st.lists(st.floats(0, 10), min_size=7, max_size=7), st.floats(0.5, 20))
def test_wl_clamp_equals_analytic(picks, alpha, c):
    w = WorldParams(alpha=alpha, capacity=c, N=len(picks))
    s = JointState(picks)
    for i in range(len(picks)):
        assert abs(wl_reward(i, s, w) - wl_reward_analytic(i, s, w)) <= 1e-12


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 20), st.integers(1, 6), st.integers(0, 2**32), st.data())
def test_wlu_of_effect_set_is_summed_weekly_wl(N, T, seed, data):
    gen = np.random.default_rng(seed)
    w = WorldParams(N=N)
    tr = Trajectory(gen.integers(0, 7, (T, N)))
    agent = data.draw(st.integers(0, N - 1))
    weekly = sum(wl_reward(agent, s, w) for s in tr.states)
    assert abs(wlu(tr, effect_set(agent, T), w) - weekly) <= 1e-9


def test_wlu_edges():
    w = WorldParams(N=3)
    tr = Trajectory(np.array([[0, 1, 2], [0, 0, 0]]))
    assert wlu(tr, [], w) == 0.0
    full = {(a, t) for a in range(3) for t in range(2)}
    assert wlu(tr, full, w) == pytest.approx(world_utility(tr, w))
    assert world_utility(clamp(tr, full), w) == 0.0


def test_reward_dispatch():
    w = WorldParams(N=4)
    s = JointState([0, 0, 1, 3])
    assert reward("G", 2, s, w) == world_reward(s, w)
    assert reward("UD", 2, s, w) == ud_reward(2, s, w)
    assert reward("WL", 2, s, w) == wl_reward(2, s, w)


@pytest.mark.parametrize("kind", list(RewardKind))
@pytest.mark.parametrize("phi_kind", list(PhiKind))
def test_batch_rewards_match_scalar(kind, phi_kind, rng):
    w = WorldParams(alpha=(1.0, 0.5, 2.0, 0.0), N=12)
    picks = rng.integers(0, 4, (30, 12))
    got, weekly = batch_rewards(kind, picks, batch_counts(picks, 4), w, phi_kind)
    for r in range(30):
        s = JointState(picks[r])
        assert weekly[r] == world_reward(s, w, phi_kind)
        for i in range(12):
            assert got[r, i] == pytest.approx(reward(kind, i, s, w, phi_kind), rel=1e-12, abs=1e-12)


def test_batch_counts_ignores_clamped():
    assert batch_counts(np.array([[0, CLAMPED, 1], [1, 1, 1]]), 2).tolist() == [[1, 1], [0, 3]]
