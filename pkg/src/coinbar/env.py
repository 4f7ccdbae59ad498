"""Weekly bar simulation.

Every agent picks a night simultaneously.  Attendance and rewards then come
from the completed joint state, and each agent updates the estimate of the
night it attended.

The engine is vectorized over agents and over independent runs.  Agent
``i`` of a run seeded with ``seed`` draws from the counter-based stream
``(seed, i)`` (see :mod:`coinbar.rng`).  Its initial estimates use draws
``0..K-1`` and its week-``t`` selection uses draw ``K + t``.  A run therefore
does not depend on how runs are batched or on the order agents are stepped
in.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .errors import ConfigError, UsageError
from .learner import (
    LearnerParams,
    LearnerState,
    _choose_nights_first,
    initial_estimates,
    step_sizes,
    temperature,
)
from .rng import AgentStream, agent_keys, uniforms
from .state import JointState, Trajectory, WorldParams
from .utilities import PhiKind, RewardKind, batch_counts, batch_rewards


@dataclass(frozen=True)
class SimConfig:
    world: WorldParams = field(default_factory=WorldParams)
    learner: LearnerParams = field(default_factory=LearnerParams)
    reward_kind: RewardKind = RewardKind.WL
    phi_kind: PhiKind = PhiKind.EXPONENTIAL
    weeks: int = 2000
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "reward_kind", RewardKind.parse(self.reward_kind))
        object.__setattr__(self, "phi_kind", PhiKind.parse(self.phi_kind))
        if int(self.weeks) != self.weeks or self.weeks < 1:
            raise ConfigError(f"weeks must be a positive integer, got {self.weeks}")
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigError(f"seed must be an unsigned 64-bit integer, got {self.seed}")
        object.__setattr__(self, "weeks", int(self.weeks))
        object.__setattr__(self, "seed", int(self.seed))

    def evolve(self, **changes) -> "SimConfig":
        return replace(self, **changes)


@dataclass(frozen=True, eq=False)
class SimResult:
    trajectory: Trajectory
    weekly_world_reward: np.ndarray
    final_learners: tuple[LearnerState, ...]
    final_attendance: np.ndarray

    def __eq__(self, other):
        if not isinstance(other, SimResult):
            return NotImplemented
        return (self.trajectory == other.trajectory
                and np.array_equal(self.weekly_world_reward, other.weekly_world_reward)
                and self.final_learners == other.final_learners
                and np.array_equal(self.final_attendance, other.final_attendance))


@dataclass
class BatchResult:
    """Raw output of :func:`simulate_batch` for runs ``seeds[0..R-1]``."""

    seeds: tuple[int, ...]
    world_reward: np.ndarray          # (R, T)
    final_attendance: np.ndarray      # (R, K)
    final_estimates: np.ndarray       # (R, N, K)
    final_visits: np.ndarray          # (R, N, K)
    picks: np.ndarray | None = None   # (R, T, N) when recorded


def _step(estimates, visits, week, u, config: SimConfig):
    """Advance a batch one week, updating ``estimates`` and ``visits`` in place.

    Both arrays are night-first, shape ``(K, R, N)``.  Returns ``(picks,
    counts, weekly_world_reward, rewards)``.
    """
    K = config.world.K
    T = temperature(week, config.learner)
    picks = _choose_nights_first(estimates, T, u, config.learner)
    counts = batch_counts(picks, K)
    rewards, weekly = batch_rewards(config.reward_kind, picks, counts, config.world, config.phi_kind)
    R, N = picks.shape
    # Flat index into (K, R, N): night-major, so each agent touches one cell.
    flat = picks.ravel() * (R * N) + np.arange(R * N)
    est_flat = estimates.reshape(-1)
    vis_flat = visits.reshape(-1)
    vis_flat[flat] += 1
    beta = step_sizes(vis_flat[flat], config.learner)
    old = est_flat[flat]
    est_flat[flat] = old + beta * (rewards.ravel() - old)
    return picks, counts, weekly, rewards


def simulate_batch(config: SimConfig, seeds: Sequence[int], record_picks: bool = False) -> BatchResult:
    """Run one simulation per seed, all under ``config`` (its own seed is ignored)."""
    seeds = tuple(int(s) for s in seeds)
    if not seeds:
        raise UsageError("simulate_batch needs at least one seed")
    N, K, weeks = config.world.N, config.world.K, config.weeks
    keys = np.stack([agent_keys(s, np.arange(N)) for s in seeds])
    estimates = np.ascontiguousarray(np.moveaxis(initial_estimates(keys, K, config.learner), -1, 0))
    visits = np.zeros(estimates.shape, dtype=np.int64)
    world_reward = np.empty((len(seeds), weeks))
    picks_log = None
    if record_picks:
        picks_log = np.empty((len(seeds), weeks, N), dtype=np.int8 if K < 127 else np.int32)
    counts = np.zeros((len(seeds), K), dtype=np.int64)
    for t in range(weeks):
        u = uniforms(keys, K + t)
        picks, counts, weekly, _ = _step(estimates, visits, t, u, config)
        world_reward[:, t] = weekly
        if record_picks:
            picks_log[:, t] = picks
    return BatchResult(seeds, world_reward, counts, np.moveaxis(estimates, 0, -1).copy(),
                       np.moveaxis(visits, 0, -1).copy(), picks_log)


def fresh_learners(config: SimConfig) -> tuple[list[LearnerState], list[AgentStream]]:
    """Week-0 learners and their streams, positioned after the init draws."""
    learners, streams = [], []
    K = config.world.K
    for i in range(config.world.N):
        stream = AgentStream(config.seed, i)
        est = initial_estimates(stream.key, K, config.learner)
        stream.position = K
        learners.append(LearnerState(est, 0))
        streams.append(stream)
    return learners, streams


def run_week(learners: Sequence[LearnerState], week: int, config: SimConfig,
             streams: Sequence[AgentStream]):
    """One simultaneous week for explicit learners.

    Each stream supplies one draw.  Returns ``(joint_state, rewards,
    learners)``, where the returned learners are already advanced to
    ``week + 1``.
    """
    N = config.world.N
    if len(learners) != N or len(streams) != N:
        raise ConfigError(f"expected {N} learners and streams, got {len(learners)} and {len(streams)}")
    estimates = np.ascontiguousarray(np.stack([l.estimates for l in learners]).T[:, None, :])
    visits = np.ascontiguousarray(np.stack([l.visits for l in learners]).T[:, None, :])
    keys = np.array([s.key for s in streams], dtype=np.uint64)
    positions = np.array([s.position for s in streams], dtype=np.uint64)
    u = uniforms(keys, positions)[None]
    for s in streams:
        s.position += 1
    picks, _, _, rewards = _step(estimates, visits, week, u, config)
    updated = tuple(LearnerState(estimates[:, 0, i], week + 1, visits[:, 0, i]) for i in range(N))
    return JointState(picks[0], week), rewards[0].copy(), updated


def run_simulation(config: SimConfig) -> SimResult:
    """Full deterministic run of ``config.weeks`` weeks from fresh learners."""
    batch = simulate_batch(config, [config.seed], record_picks=True)
    learners = tuple(
        LearnerState(batch.final_estimates[0, i], config.weeks, batch.final_visits[0, i])
        for i in range(config.world.N)
    )
    return SimResult(
        trajectory=Trajectory(batch.picks[0]),
        weekly_world_reward=batch.world_reward[0].copy(),
        final_learners=learners,
        final_attendance=batch.final_attendance[0].copy(),
    )
