"""Verification tools: factoredness, learnability, optimal allocation, convergence.

Learnability uses single-pick finite differences in place of gradients.
Moving one agent to another night is the discrete analogue of a gradient
step in the one-hot embedding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .errors import InstanceTooLargeError, UnsupportedError, UsageError
from .state import CLAMPED, JointState, Trajectory, WorldParams
from .utilities import (
    PhiKind,
    RewardKind,
    batch_counts,
    batch_rewards,
    batch_world_rewards,
    reward,
    world_reward,
)

ENUMERATION_BUDGET = 10**6


# -- factoredness ---------------------------------------------------------------

@dataclass(frozen=True)
class Counterexample:
    profile_a: tuple[int, ...]
    profile_b: tuple[int, ...]
    agent: int
    g_values: tuple[float, float]
    G_values: tuple[float, float]


@dataclass(frozen=True)
class FactoredVerdict:
    factored: bool
    counterexample: Counterexample | None = None
    profiles_checked: int = 0

    def __post_init__(self):
        if self.factored != (self.counterexample is None):
            raise UsageError("a verdict is unfactored exactly when it carries a counterexample")

    def verify(self, reward_kind, params: WorldParams, phi_kind: PhiKind = PhiKind.EXPONENTIAL) -> bool:
        """Re-evaluate the counterexample with the scalar reward functions.

        True when it is a genuine violation of the sign agreement between
        the agent's reward and the world reward, and trivially true for a
        factored verdict.
        """
        if self.counterexample is None:
            return True
        cx = self.counterexample
        a, b = JointState(cx.profile_a), JointState(cx.profile_b)
        ga, gb = (reward(reward_kind, cx.agent, s, params, phi_kind) for s in (a, b))
        Ga, Gb = (world_reward(s, params, phi_kind) for s in (a, b))
        differ = np.flatnonzero(a.picks != b.picks)
        return list(differ) == [cx.agent] and (ga >= gb) != (Ga >= Gb)


def factoredness_check(N: int, K: int, reward_kind, params: WorldParams | None = None,
                       phi_kind: PhiKind = PhiKind.EXPONENTIAL) -> FactoredVerdict:
    """Exhaustive single-week factoredness test.

    For every agent and every pair of profiles differing only in that
    agent's pick, check ``g(a) >= g(b)`` iff ``G(a) >= G(b)``.  ``params``
    supplies alpha and capacity (uniform alpha, c=6 by default); its N is
    replaced by ``N``.  Wonderful-life rewards are evaluated through the
    clamp, as the difference of two world rewards.
    """
    if N < 1 or K < 1:
        raise UsageError(f"need N >= 1 and K >= 1, got N={N}, K={K}")
    if params is None:
        params = WorldParams(alpha=(1.0,) * K, N=N)
    if params.K != K:
        raise UsageError(f"params has K={params.K} nights but K={K} was requested")
    params = params.with_agents(N)
    if K**N > ENUMERATION_BUDGET:
        raise InstanceTooLargeError(f"K^N = {K}^{N} profiles exceeds the budget of {ENUMERATION_BUDGET}")
    phi_kind = PhiKind.parse(phi_kind)
    kind = RewardKind.parse(reward_kind)

    # Row p is the base-K expansion of p with agent 0 most significant.
    profiles = np.indices((K,) * N).reshape(N, -1).T
    counts = batch_counts(profiles, K)
    g, G = batch_rewards(kind, profiles, counts, params, phi_kind, exact_clamp=True)
    shape = (K,) * N
    G_grid = G.reshape(shape)
    for agent in range(N):
        Gm = np.moveaxis(G_grid, agent, -1).reshape(-1, K)
        gm = np.moveaxis(g[:, agent].reshape(shape), agent, -1).reshape(-1, K)
        bad = (gm[:, :, None] >= gm[:, None, :]) != (Gm[:, :, None] >= Gm[:, None, :])
        if bad.any():
            row, i, j = np.unravel_index(np.flatnonzero(bad)[0], bad.shape)
            a = _rebuild(row, i, agent, N, K)
            b = _rebuild(row, j, agent, N, K)
            cx = Counterexample(a, b, agent, (float(gm[row, i]), float(gm[row, j])),
                                (float(Gm[row, i]), float(Gm[row, j])))
            return FactoredVerdict(False, cx, len(profiles))
    return FactoredVerdict(True, None, len(profiles))


def _rebuild(row: int, pick: int, agent: int, N: int, K: int) -> tuple[int, ...]:
    others = np.unravel_index(row, (K,) * (N - 1)) if N > 1 else ()
    profile = [int(v) for v in others]
    profile.insert(agent, int(pick))
    return tuple(profile)


# -- learnability ---------------------------------------------------------------

@dataclass(frozen=True)
class Perturbations:
    """Sampled single-pick changes to states of a trajectory.

    ``own`` rows are ``(week, agent, new_pick)``; ``other`` rows are
    ``(week, agent, other_agent, new_pick)``, where ``other_agent`` moves
    and ``agent`` is the one whose reward is observed.
    """

    own: np.ndarray
    other: np.ndarray

    @property
    def M(self) -> int:
        return len(self.own)


def sample_perturbations(traj: Trajectory, K: int, M: int, rng: np.random.Generator,
                         agent: int | None = None) -> Perturbations:
    """Draw ``M`` own and ``M`` other-agent perturbations uniformly over weeks and agents.

    A fixed ``agent`` restricts the observed agent, as needed for ratios
    tied to one agent's effect set.
    """
    if M < 1:
        raise UsageError(f"need at least one sample, got M={M}")
    N = traj.N
    if N < 2:
        raise UsageError("learnability needs at least two agents")
    if K < 2:
        raise UsageError("learnability needs at least two nights")
    if (traj.picks == CLAMPED).any():
        raise UsageError("perturbations are only defined on unclamped trajectories")
    if agent is not None and not 0 <= agent < N:
        raise UsageError(f"agent {agent} outside N={N}")

    def observed():
        return np.full(M, agent) if agent is not None else rng.integers(0, N, M)

    t_own = rng.integers(0, traj.T, M)
    a_own = observed()
    new_own = (traj.picks[t_own, a_own] + rng.integers(1, K, M)) % K

    t_oth = rng.integers(0, traj.T, M)
    a_oth = observed()
    o = (a_oth + rng.integers(1, N, M)) % N
    new_oth = (traj.picks[t_oth, o] + rng.integers(1, K, M)) % K
    return Perturbations(np.stack([t_own, a_own, new_own], 1),
                         np.stack([t_oth, a_oth, o, new_oth], 1))


def _reward_change(kind, traj, base_t, observed, mover, new_pick, params, phi_kind):
    base = traj.picks[base_t].astype(np.int64)
    moved = base.copy()
    rows = np.arange(len(base))
    moved[rows, mover] = new_pick
    K = params.K
    out = []
    for picks in (base, moved):
        r, _ = batch_rewards(kind, picks, batch_counts(picks, K), params, phi_kind)
        out.append(r[rows, observed])
    return out[1] - out[0]


def _rms(x) -> float:
    x = np.asarray(x, dtype=np.float64)
    return math.sqrt(float(np.mean(x * x)))


def _ratio(num: float, den: float) -> float:
    if den == 0:
        return math.inf
    return num / den


def _check_traj(traj: Trajectory, params: WorldParams):
    if traj.N != params.N:
        raise UsageError(f"trajectory has {traj.N} agents but params has N={params.N}")
    if traj.N < 2:
        raise UsageError("learnability needs at least two agents")


def learnability_estimate(traj: Trajectory, reward_kind, params: WorldParams, M: int = 10_000,
                          rng: np.random.Generator | None = None,
                          phi_kind: PhiKind = PhiKind.EXPONENTIAL,
                          perturbations: Perturbations | None = None) -> float:
    """RMS reward change from own-pick moves over RMS change from other agents' moves.

    Returns ``inf`` when other agents' moves never change the reward.
    """
    _check_traj(traj, params)
    if perturbations is None:
        rng = np.random.default_rng(0) if rng is None else rng
        perturbations = sample_perturbations(traj, params.K, M, rng)
    kind = RewardKind.parse(reward_kind)
    own, oth = perturbations.own, perturbations.other
    d_own = _reward_change(kind, traj, own[:, 0], own[:, 1], own[:, 1], own[:, 2], params, phi_kind)
    d_oth = _reward_change(kind, traj, oth[:, 0], oth[:, 1], oth[:, 2], oth[:, 3], params, phi_kind)
    return _ratio(_rms(d_own), _rms(d_oth))


@dataclass
class LearnabilityReport:
    lambda_values: dict[RewardKind, float]
    ratio_wl_over_g: float
    samples: int
    perturbations: Perturbations = field(repr=False)
    infinite: frozenset = frozenset()


def learnability_report(traj: Trajectory, params: WorldParams, M: int = 10_000,
                        rng: np.random.Generator | None = None,
                        phi_kind: PhiKind = PhiKind.EXPONENTIAL,
                        kinds: Iterable = tuple(RewardKind)) -> LearnabilityReport:
    """Learnability of several reward kinds on one shared perturbation set."""
    _check_traj(traj, params)
    rng = np.random.default_rng(0) if rng is None else rng
    perts = sample_perturbations(traj, params.K, M, rng)
    lam = {RewardKind.parse(k): learnability_estimate(traj, k, params, phi_kind=phi_kind,
                                                      perturbations=perts)
           for k in kinds}
    wl, g = lam.get(RewardKind.WL), lam.get(RewardKind.G)
    ratio = math.nan if wl is None or g is None else (math.inf if math.isinf(wl) else wl / g)
    return LearnabilityReport(lam, ratio, M, perts, frozenset(k for k, v in lam.items() if math.isinf(v)))


def theorem2_ratio(traj: Trajectory, sigma, params: WorldParams, perturbations: Perturbations,
                   phi_kind: PhiKind = PhiKind.EXPONENTIAL) -> float:
    """Sensitivity of G to other agents over that of ``G - G(clamped on sigma)``.

    Both are RMS finite differences over ``perturbations.other``.  With
    ``sigma`` an agent's effect set this equals the wonderful-life to world
    learnability ratio for that agent.  Empty ``sigma`` gives ``inf``.
    """
    _check_traj(traj, params)
    mask = np.zeros(traj.picks.shape, dtype=bool)
    for member in sigma:
        a, t = member
        if not (0 <= a < traj.N and 0 <= t < traj.T):
            raise UsageError(f"clamp member {member} outside trajectory of N={traj.N}, T={traj.T}")
        mask[t, a] = True
    oth = perturbations.other
    t, mover, new = oth[:, 0], oth[:, 2], oth[:, 3]
    rows = np.arange(len(t))
    base = traj.picks[t].astype(np.int64)
    moved = base.copy()
    moved[rows, mover] = new
    K = params.K

    def G(picks):
        return batch_world_rewards(batch_counts(picks, K), params, phi_kind)

    dG = G(moved) - G(base)
    dG_cl = G(np.where(mask[t], CLAMPED, moved)) - G(np.where(mask[t], CLAMPED, base))
    return _ratio(_rms(dG), _rms(dG - dG_cl))


# -- optimal allocation ---------------------------------------------------------

def _phi_row(alpha: float, capacity: float, N: int) -> np.ndarray:
    y = np.arange(N + 1, dtype=np.float64)
    return alpha * y * np.exp(-y / capacity)


def optimal_allocation(params: WorldParams, phi_kind: PhiKind = PhiKind.EXPONENTIAL):
    """Attendance profile maximizing the world reward, and that reward.

    Each night's reward is concave below ``2c`` and convex above, so an
    optimum puts at most one night above ``L = ceil(2c)``.  A suffix DP
    tracks whether that night has been used.  Ties go to the
    lexicographically smallest profile.
    """
    if PhiKind.parse(phi_kind) is not PhiKind.EXPONENTIAL:
        raise UnsupportedError("optimal allocation is only available for the exponential reward")
    N, K = params.N, params.K
    if N > 10**5:
        raise InstanceTooLargeError(f"N={N} exceeds the allocation limit of 100000")
    L = min(N, math.ceil(2 * params.capacity))
    phis = [_phi_row(a, params.capacity, N) for a in params.alpha]
    neg = -math.inf
    # S0[k][n]: nights k.. hold n agents, none above L.  S1 allows one.
    S0 = np.full((K + 1, N + 1), neg)
    S1 = np.full((K + 1, N + 1), neg)
    S0[K, 0] = S1[K, 0] = 0.0
    for k in range(K - 1, -1, -1):
        p = phis[k]
        for x in range(L + 1):
            S0[k, x:] = np.maximum(S0[k, x:], p[x] + S0[k + 1, :N + 1 - x])
            S1[k, x:] = np.maximum(S1[k, x:], p[x] + S1[k + 1, :N + 1 - x])
        reach = min(N, (K - k - 1) * L)
        for m in range(reach + 1):
            if S0[k + 1, m] == neg or m + L + 1 > N:
                continue
            n = np.arange(m + L + 1, N + 1)
            S1[k, n] = np.maximum(S1[k, n], p[n - m] + S0[k + 1, m])
    best = float(S1[0, N])
    tol = 1e-12 * max(1.0, abs(best))
    profile, acc, n, free = [], 0.0, N, True
    for k in range(K):
        p = phis[k]
        xs = np.arange(n + 1)
        suffix = np.where(xs <= L, (S1 if free else S0)[k + 1, n - xs], neg)
        if free:
            suffix = np.where(xs > L, S0[k + 1, n - xs], suffix)
        ok = np.flatnonzero(acc + p[xs] + suffix >= best - tol)
        x = int(ok[0])
        profile.append(x)
        acc += p[x]
        n -= x
        free = free and x <= L
    return np.array(profile, dtype=np.int64), best


# -- convergence ---------------------------------------------------------------

@dataclass(frozen=True)
class ConvergenceMeasure:
    converged_week: int | None
    plateau_value: float
    window: int
    tolerance: float


def convergence_time(series, window: int = 100, tolerance: float = 0.05) -> ConvergenceMeasure:
    """Earliest week after which every window mean stays near the plateau.

    The plateau is the mean of the final 10% of the series.  Week ``t``
    qualifies when the means of ``series[s:s+window]`` for all ``s >= t``
    lie within ``tolerance * |plateau|`` of it.
    """
    y = np.asarray(series, dtype=np.float64)
    if y.ndim != 1:
        raise UsageError("convergence_time takes a 1-d series")
    if window < 1:
        raise UsageError(f"window must be positive, got {window}")
    if tolerance < 0:
        raise UsageError(f"tolerance must be non-negative, got {tolerance}")
    if y.size < 2 * window:
        raise UsageError(f"series of length {y.size} is shorter than twice the window ({window})")
    tail = max(1, int(math.ceil(0.1 * y.size)))
    plateau = float(y[-tail:].mean())
    means = np.lib.stride_tricks.sliding_window_view(y, window).mean(axis=1)
    inside = np.abs(means - plateau) <= tolerance * abs(plateau)
    if not inside[-1]:
        return ConvergenceMeasure(None, plateau, window, tolerance)
    outside = np.flatnonzero(~inside)
    week = 0 if outside.size == 0 else int(outside[-1]) + 1
    return ConvergenceMeasure(week, plateau, window, tolerance)
