"""Night rewards, world reward/utility and the per-agent reward functions.

Everything here is stated as a reward to be maximized.  The exponential
night reward is ``alpha_k * y * exp(-y / c)``.  The minority variant pays the
minimum attendance to the least-attended night and nothing elsewhere; ties
go to the lowest night index (an arbitrary but deterministic rule).
"""

from __future__ import annotations

import math
from enum import Enum
from functools import lru_cache
from typing import Iterable

import numpy as np

from .errors import BoundsError, UndefinedRewardError, UsageError
from .state import (
    CLAMPED,
    JointState,
    Trajectory,
    WorldParams,
    attendance,
    clamp,
    clamp_state,
)


class RewardKind(str, Enum):
    G = "G"
    UD = "UD"
    WL = "WL"

    @classmethod
    def parse(cls, value) -> "RewardKind":
        if isinstance(value, cls):
            return value
        aliases = {"WORLD": "G", "WORLDG": "G", "UNIFORMDIVISION": "UD", "WONDERFULLIFE": "WL"}
        key = str(value).strip().upper().replace("_", "").replace("-", "")
        try:
            return cls(aliases.get(key, key))
        except ValueError:
            raise UsageError(f"unknown reward kind {value!r}; expected G, UD or WL") from None


class PhiKind(str, Enum):
    EXPONENTIAL = "exponential"
    MINORITY = "minority"

    @classmethod
    def parse(cls, value) -> "PhiKind":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise UsageError(f"unknown phi kind {value!r}; expected exponential or minority") from None


def phi(k: int, y, params: WorldParams, kind: PhiKind = PhiKind.EXPONENTIAL) -> float:
    """Reward night ``k`` generates when ``y`` agents attend it."""
    if kind is PhiKind.MINORITY:
        raise UsageError("the minority reward depends on the whole profile; use minority_reward(counts)")
    if not 0 <= k < params.K:
        raise BoundsError(f"night {k} out of range for K={params.K}")
    if y < 0:
        raise UsageError(f"attendance must be non-negative, got {y}")
    return params.alpha[k] * y * math.exp(-y / params.capacity)


@lru_cache(maxsize=64)
def phi_table(params: WorldParams) -> np.ndarray:
    """Read-only ``table[k, y] = phi_k(y)`` for ``y = 0..N+1``.

    Every exponential night reward in the package is looked up here, so a
    world reward recomputed from a stored trajectory is bit-identical to the
    one the simulator recorded.
    """
    y = np.arange(params.N + 2, dtype=np.float64)
    table = np.asarray(params.alpha)[:, None] * (y * np.exp(-y / params.capacity))[None, :]
    table.setflags(write=False)
    return table


def minority_reward(counts) -> np.ndarray:
    """Per-night minority rewards: ``min(x)`` on the first argmin night, 0 elsewhere."""
    counts = np.asarray(counts)
    out = np.zeros(counts.shape[-1])
    k = int(np.argmin(counts))
    out[k] = counts[k]
    return out


def night_rewards(counts, params: WorldParams, kind: PhiKind = PhiKind.EXPONENTIAL) -> np.ndarray:
    """Reward generated by each night for an attendance profile."""
    counts = np.asarray(counts)
    if kind is PhiKind.MINORITY:
        return minority_reward(counts)
    table = phi_table(params)
    if counts.size and counts.max() < table.shape[1]:
        return table[np.arange(params.K), counts]
    return np.asarray(params.alpha) * (counts * np.exp(-counts / params.capacity))


def world_reward_from_counts(counts, params: WorldParams, kind: PhiKind = PhiKind.EXPONENTIAL) -> float:
    return float(night_rewards(counts, params, kind).sum())


def world_reward(state: JointState, params: WorldParams, kind: PhiKind = PhiKind.EXPONENTIAL) -> float:
    """Weekly world reward: the sum of the night rewards."""
    return world_reward_from_counts(attendance(state, params), params, kind)


def world_utility(traj: Trajectory, params: WorldParams, kind: PhiKind = PhiKind.EXPONENTIAL) -> float:
    """Sum of weekly world rewards over the trajectory."""
    if traj.T == 0:
        raise UsageError("world utility of an empty trajectory is undefined")
    return math.fsum(world_reward(s, params, kind) for s in traj.states)


def ud_reward(agent: int, state: JointState, params: WorldParams,
              kind: PhiKind = PhiKind.EXPONENTIAL) -> float:
    """Uniform division: the agent's night reward split evenly among its attendees."""
    d = int(state.picks[agent])
    if d == CLAMPED:
        raise UndefinedRewardError(f"agent {agent} is clamped; uniform-division reward is undefined")
    counts = attendance(state, params)
    if counts[d] == 0:
        raise UndefinedRewardError(f"night {d} has zero attendance")
    return float(night_rewards(counts, params, kind)[d] / counts[d])


def wl_reward(agent: int, state: JointState, params: WorldParams,
              kind: PhiKind = PhiKind.EXPONENTIAL) -> float:
    """Wonderful-life reward: world reward minus world reward with the agent clamped."""
    if not 0 <= agent < state.N:
        raise BoundsError(f"agent {agent} outside state of N={state.N}")
    return world_reward(state, params, kind) - world_reward(clamp_state(state, [agent]), params, kind)


def wl_reward_analytic(agent: int, state: JointState, params: WorldParams) -> float:
    """Exponential-phi shortcut ``phi_d(x_d) - phi_d(x_d - 1)``; only the agent's night changes."""
    d = int(state.picks[agent])
    if d == CLAMPED:
        return 0.0
    x = int(attendance(state, params)[d])
    return phi(d, x, params) - phi(d, x - 1, params)


def reward(kind: RewardKind, agent: int, state: JointState, params: WorldParams,
           phi_kind: PhiKind = PhiKind.EXPONENTIAL) -> float:
    """The weekly reward an agent receives under ``kind``."""
    kind = RewardKind.parse(kind)
    if kind is RewardKind.G:
        return world_reward(state, params, phi_kind)
    if kind is RewardKind.UD:
        return ud_reward(agent, state, params, phi_kind)
    return wl_reward(agent, state, params, phi_kind)


def wlu(traj: Trajectory, sigma: Iterable, params: WorldParams,
        kind: PhiKind = PhiKind.EXPONENTIAL) -> float:
    """World utility minus world utility of the trajectory clamped on ``sigma``."""
    return world_utility(traj, params, kind) - world_utility(clamp(traj, sigma), params, kind)


# -- batched forms, shared by the simulator and the analysis tools -------------

def batch_counts(picks, K: int) -> np.ndarray:
    """Attendance ``(R, K)`` for a batch of joint states ``(R, N)``; CLAMPED counts nowhere."""
    picks = np.asarray(picks)
    R = picks.shape[0]
    bins = np.where(picks == CLAMPED, K, picks)
    offsets = (np.arange(R) * (K + 1))[:, None]
    flat = np.bincount((bins + offsets).ravel(), minlength=R * (K + 1))
    return flat.reshape(R, K + 1)[:, :K]


def batch_night_values(counts, params: WorldParams, kind: PhiKind = PhiKind.EXPONENTIAL) -> np.ndarray:
    counts = np.asarray(counts)
    if kind is PhiKind.MINORITY:
        vals = np.zeros(counts.shape, dtype=np.float64)
        rows = np.arange(counts.shape[0])
        k = counts.argmin(axis=1)
        vals[rows, k] = counts[rows, k]
        return vals
    return phi_table(params)[np.arange(params.K), counts]


def batch_world_rewards(counts, params: WorldParams, kind: PhiKind = PhiKind.EXPONENTIAL) -> np.ndarray:
    return batch_night_values(counts, params, kind).sum(axis=1)


def batch_rewards(kind: RewardKind, picks, counts, params: WorldParams,
                  phi_kind: PhiKind = PhiKind.EXPONENTIAL, night_vals=None,
                  exact_clamp: bool = False):
    """Per-agent rewards ``(R, N)`` and world rewards ``(R,)`` for a batch of states.

    Wonderful-life rewards under the exponential phi use the single-night
    difference unless ``exact_clamp`` is set.  In that case (and always for
    the minority phi) they are computed as world reward minus the world
    reward of the profile with the agent removed.  Picks must not be CLAMPED.
    """
    picks = np.asarray(picks)
    counts = np.asarray(counts)
    if night_vals is None:
        night_vals = batch_night_values(counts, params, phi_kind)
    weekly = night_vals.sum(axis=1)
    kind = RewardKind.parse(kind)
    if kind is RewardKind.G:
        return np.broadcast_to(weekly[:, None], picks.shape).copy(), weekly
    rows = np.arange(picks.shape[0])[:, None]
    x = counts[rows, picks]
    if kind is RewardKind.UD:
        return night_vals[rows, picks] / x, weekly
    if phi_kind is PhiKind.EXPONENTIAL and not exact_clamp:
        table = phi_table(params)
        return table[picks, x] - table[picks, x - 1], weekly
    without = np.empty(counts.shape, dtype=np.float64)
    for k in range(params.K):
        reduced = counts.copy()
        reduced[:, k] = np.maximum(reduced[:, k] - 1, 0)
        without[:, k] = batch_world_rewards(reduced, params, phi_kind)
    return weekly[:, None] - without[rows, picks], weekly
