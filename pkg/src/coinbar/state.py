"""Agent picks, weekly joint states, trajectories and the clamping operator.

A pick is stored as an integer night index ``0 <= k < K``; the clamped
(null) pick is ``CLAMPED = -1``.  The unary encoding used by the theory,
where a night is a one-hot K-vector and the clamped pick is all zeros, is
available through :func:`unary`.

All containers are immutable: their arrays are flagged read-only and every
transformation returns a fresh object.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import BoundsError, ConfigError, UsageError

CLAMPED = -1

#: Members of a clamp set, as ``(agent, week)`` pairs.
ClampSet = frozenset


def _frozen(a, dtype=np.int64) -> np.ndarray:
    arr = np.array(a, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class WorldParams:
    """Bar world: K nights with weights ``alpha``, capacity ``c`` and N agents."""

    alpha: tuple[float, ...] = (1.0,) * 7
    capacity: float = 6.0
    N: int = 168

    def __post_init__(self):
        object.__setattr__(self, "alpha", tuple(float(a) for a in self.alpha))
        if len(self.alpha) < 1:
            raise ConfigError("alpha must have at least one night")
        if any(not np.isfinite(a) or a < 0 for a in self.alpha):
            raise ConfigError(f"alpha entries must be finite and non-negative: {self.alpha}")
        if not (self.capacity > 0 and np.isfinite(self.capacity)):
            raise ConfigError(f"capacity must be positive, got {self.capacity}")
        if int(self.N) != self.N or self.N < 1:
            raise ConfigError(f"N must be a positive integer, got {self.N}")
        object.__setattr__(self, "N", int(self.N))

    @property
    def K(self) -> int:
        return len(self.alpha)

    def with_agents(self, N: int) -> "WorldParams":
        return WorldParams(alpha=self.alpha, capacity=self.capacity, N=N)


@dataclass(frozen=True, eq=False)
class JointState:
    """All agents' picks in one week."""

    picks: np.ndarray
    week: int = 0

    def __post_init__(self):
        picks = _frozen(self.picks)
        if picks.ndim != 1 or picks.size == 0:
            raise ConfigError("picks must be a non-empty 1-d sequence")
        if picks.min() < CLAMPED:
            raise BoundsError(f"invalid pick value {picks.min()}")
        if self.week < 0:
            raise ConfigError(f"week must be non-negative, got {self.week}")
        object.__setattr__(self, "picks", picks)
        object.__setattr__(self, "week", int(self.week))

    @property
    def N(self) -> int:
        return self.picks.size

    def __eq__(self, other):
        if not isinstance(other, JointState):
            return NotImplemented
        return self.week == other.week and np.array_equal(self.picks, other.picks)

    def __hash__(self):
        return hash((self.week, self.picks.tobytes()))

    def with_pick(self, agent: int, pick: int) -> "JointState":
        picks = self.picks.copy()
        picks[agent] = pick
        return JointState(picks, self.week)


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Picks of all agents over weeks ``0..T-1``, stored as a ``(T, N)`` array."""

    picks: np.ndarray
    _states: tuple = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        picks = _frozen(self.picks)
        if picks.ndim != 2 or picks.shape[0] == 0 or picks.shape[1] == 0:
            raise ConfigError("trajectory picks must be a non-empty (T, N) array")
        if picks.min() < CLAMPED:
            raise BoundsError(f"invalid pick value {picks.min()}")
        object.__setattr__(self, "picks", picks)

    @classmethod
    def from_states(cls, states: Sequence[JointState]) -> "Trajectory":
        if not states:
            raise UsageError("a trajectory needs at least one week")
        sizes = {s.N for s in states}
        if len(sizes) != 1:
            raise ConfigError(f"all weeks must have the same number of agents, got {sorted(sizes)}")
        for t, s in enumerate(states):
            if s.week != t:
                raise ConfigError(f"state at position {t} has week {s.week}")
        return cls(np.stack([s.picks for s in states]))

    @property
    def T(self) -> int:
        return self.picks.shape[0]

    @property
    def N(self) -> int:
        return self.picks.shape[1]

    @property
    def states(self) -> tuple[JointState, ...]:
        if self._states is None:
            object.__setattr__(self, "_states", tuple(JointState(row, t) for t, row in enumerate(self.picks)))
        return self._states

    def __len__(self):
        return self.T

    def __getitem__(self, t: int) -> JointState:
        return self.states[t]

    def __eq__(self, other):
        if not isinstance(other, Trajectory):
            return NotImplemented
        return np.array_equal(self.picks, other.picks)

    def __hash__(self):
        return hash((self.picks.shape, self.picks.tobytes()))

    def concat(self, other: "Trajectory") -> "Trajectory":
        if other.N != self.N:
            raise ConfigError("cannot concatenate trajectories with different N")
        return Trajectory(np.vstack([self.picks, other.picks]))


def unary(picks, K: int) -> np.ndarray:
    """One-hot encoding; clamped picks map to the zero vector."""
    picks = np.asarray(picks)
    out = np.zeros(picks.shape + (K,), dtype=np.int8)
    mask = picks != CLAMPED
    out[mask, picks[mask]] = 1
    return out


def attendance(state: JointState, params: WorldParams) -> np.ndarray:
    """Number of agents on each night; clamped agents count nowhere."""
    if state.N != params.N:
        raise ConfigError(f"state has {state.N} agents but params has N={params.N}")
    if state.picks.max() >= params.K:
        raise BoundsError(f"pick {state.picks.max()} out of range for K={params.K}")
    return attendance_counts(state.picks, params.K)


def attendance_counts(picks, K: int) -> np.ndarray:
    picks = np.asarray(picks)
    return np.bincount(picks[picks != CLAMPED], minlength=K)[:K]


def effect_set(agent: int, weeks: int) -> ClampSet:
    """The agent's whole action sequence ``{(agent, t) for t < weeks}``."""
    return frozenset((int(agent), t) for t in range(weeks))


def full_set(N: int, weeks: int) -> ClampSet:
    return frozenset((a, t) for a in range(N) for t in range(weeks))


def _check_members(sigma: Iterable, N: int, T: int):
    for member in sigma:
        agent, week = member
        if not (0 <= agent < N and 0 <= week < T):
            raise BoundsError(f"clamp member {member} outside trajectory of N={N}, T={T}")


def clamp(traj: Trajectory, sigma: Iterable) -> Trajectory:
    """Copy of ``traj`` with every ``(agent, week)`` in ``sigma`` set to CLAMPED."""
    sigma = frozenset(sigma)
    _check_members(sigma, traj.N, traj.T)
    if not sigma:
        return traj
    agents, weeks = np.array(sorted(sigma)).T
    picks = traj.picks.copy()
    picks[weeks, agents] = CLAMPED
    return Trajectory(picks)


def clamp_state(state: JointState, agents: Iterable[int]) -> JointState:
    """Single-week clamp of the listed agents."""
    agents = list(agents)
    for a in agents:
        if not 0 <= a < state.N:
            raise BoundsError(f"agent {a} outside state of N={state.N}")
    if not agents:
        return state
    picks = state.picks.copy()
    picks[agents] = CLAMPED
    return JointState(picks, state.week)
