"""Independent reward-estimating learner with Boltzmann night selection.

Each agent keeps one estimated reward per night.  After a week, the
estimate for the night it attended moves towards the reward it received::

    est[d] <- (1 - beta) * est[d] + beta * reward

At the start of a week it samples night ``k`` with probability proportional
to ``exp(est[k] / (T * s))``.  Estimates are rewards to maximize, so the
exponent carries a plus sign.  ``T`` decays geometrically to a floor.

``s`` is the temperature scale.  With ``temperature_scale="range"`` (the
default) it is the spread ``max(est) - min(est)`` of the agent's own
estimates.  That makes one temperature schedule mean the same thing for
rewards of very different magnitude; world rewards are O(10) while
wonderful-life rewards are O(0.01).  ``"absolute"`` uses ``s = 1``, the
plain Boltzmann rule.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import BoundsError, ConfigError, StateCorruptionError, UsageError
from .rng import AgentStream, uniforms

STEP_RULES = ("ema", "sample-average")
TEMPERATURE_SCALES = ("range", "absolute")


@dataclass(frozen=True)
class LearnerParams:
    learning_rate: float = 0.2
    initial_temperature: float = 0.1
    temperature_decay: float = 0.998
    min_temperature: float = 0.05
    estimate_init: tuple[float, float] = (0.0, 16.0)
    step_rule: str = "ema"
    temperature_scale: str = "range"

    def __post_init__(self):
        lo, hi = (float(v) for v in self.estimate_init)
        object.__setattr__(self, "estimate_init", (lo, hi))
        if not 0 < self.learning_rate <= 1:
            raise ConfigError(f"learning_rate must lie in (0, 1], got {self.learning_rate}")
        if not self.initial_temperature > 0:
            raise ConfigError(f"initial_temperature must be positive, got {self.initial_temperature}")
        if not 0 < self.temperature_decay <= 1:
            raise ConfigError(f"temperature_decay must lie in (0, 1], got {self.temperature_decay}")
        if not self.min_temperature >= 0:
            raise ConfigError(f"min_temperature must be non-negative, got {self.min_temperature}")
        if not (np.isfinite(lo) and np.isfinite(hi) and lo <= hi):
            raise ConfigError(f"estimate_init must be a finite range lo <= hi, got {self.estimate_init}")
        if self.step_rule not in STEP_RULES:
            raise ConfigError(f"step_rule must be one of {STEP_RULES}, got {self.step_rule!r}")
        if self.temperature_scale not in TEMPERATURE_SCALES:
            raise ConfigError(f"temperature_scale must be one of {TEMPERATURE_SCALES}, got {self.temperature_scale!r}")


@dataclass(frozen=True, eq=False)
class LearnerState:
    estimates: np.ndarray
    week: int = 0
    visits: np.ndarray = field(default=None)

    def __post_init__(self):
        est = np.array(self.estimates, dtype=np.float64)
        if est.ndim != 1 or est.size == 0:
            raise ConfigError("estimates must be a non-empty vector")
        visits = np.zeros(est.size, dtype=np.int64) if self.visits is None else np.array(self.visits, dtype=np.int64)
        if visits.shape != est.shape:
            raise ConfigError("visits must match estimates in length")
        est.setflags(write=False)
        visits.setflags(write=False)
        object.__setattr__(self, "estimates", est)
        object.__setattr__(self, "visits", visits)

    @property
    def K(self) -> int:
        return self.estimates.size

    def __eq__(self, other):
        if not isinstance(other, LearnerState):
            return NotImplemented
        return (self.week == other.week and np.array_equal(self.estimates, other.estimates)
                and np.array_equal(self.visits, other.visits))

    def advanced(self, weeks: int = 1) -> "LearnerState":
        return LearnerState(self.estimates, self.week + weeks, self.visits)


def temperature(week: int, params: LearnerParams) -> float:
    if week < 0:
        raise UsageError(f"week must be non-negative, got {week}")
    return max(params.min_temperature, params.initial_temperature * params.temperature_decay ** week)


def _weights_nights_first(est: np.ndarray, T: float, params: LearnerParams) -> np.ndarray:
    """Selection weights for estimates laid out night-first, shape ``(K, ...)``."""
    if not T > 0:
        raise UsageError(f"temperature must be positive, got {T}")
    mx = np.maximum.reduce(est, axis=0)
    mn = np.minimum.reduce(est, axis=0)
    if not (np.isfinite(mx).all() and np.isfinite(mn).all()):
        raise StateCorruptionError("non-finite reward estimate")
    if params.temperature_scale == "absolute":
        scale = T
    else:
        spread = mx - mn
        scale = T * np.where(spread > 0, spread, 1.0)
    return np.exp((est - mx) / scale)


def _choose_nights_first(est: np.ndarray, T: float, u, params: LearnerParams) -> np.ndarray:
    cum = np.cumsum(_weights_nights_first(est, T, params), axis=0)
    picks = (cum <= np.asarray(u) * cum[-1]).sum(axis=0)
    return np.minimum(picks, est.shape[0] - 1)


def _nights_first(estimates) -> np.ndarray:
    return np.ascontiguousarray(np.moveaxis(np.asarray(estimates, dtype=np.float64), -1, 0))


def boltzmann_weights(estimates, T: float, params: LearnerParams) -> np.ndarray:
    """Unnormalized selection weights along the last axis; the best night has weight 1."""
    return np.moveaxis(_weights_nights_first(_nights_first(estimates), T, params), 0, -1)


def boltzmann_probabilities(estimates, T: float, params: LearnerParams) -> np.ndarray:
    w = boltzmann_weights(estimates, T, params)
    return w / w.sum(axis=-1, keepdims=True)


def effective_temperature(estimates, T: float, params: LearnerParams):
    """Temperature of the plain Boltzmann law the selection rule reduces to."""
    if params.temperature_scale == "absolute":
        return T
    est = np.asarray(estimates, dtype=np.float64)
    spread = est.max(axis=-1) - est.min(axis=-1)
    return T * np.where(spread > 0, spread, 1.0)


def choose_nights(estimates, T: float, u, params: LearnerParams) -> np.ndarray:
    """Inverse-CDF Boltzmann draw for every row of ``estimates`` (last axis = nights)."""
    return _choose_nights_first(_nights_first(estimates), T, u, params)


def select_pick(state: LearnerState, params: LearnerParams, stream: AgentStream) -> int:
    """Sample this week's night; consumes exactly one draw from ``stream``."""
    T = temperature(state.week, params)
    return int(choose_nights(state.estimates, T, stream.random(), params))


def step_sizes(visits, params: LearnerParams):
    """Step size for an update given the post-update visit count(s)."""
    if params.step_rule == "sample-average":
        return 1.0 / np.asarray(visits, dtype=np.float64)
    return params.learning_rate


def update_estimate(state: LearnerState, picked: int, reward: float, params: LearnerParams) -> LearnerState:
    """Move the attended night's estimate towards ``reward``; other nights are untouched."""
    if not 0 <= picked < state.K:
        raise BoundsError(f"night {picked} out of range for K={state.K}")
    if not np.isfinite(reward):
        raise StateCorruptionError(f"non-finite reward {reward}")
    est = state.estimates.copy()
    visits = state.visits.copy()
    visits[picked] += 1
    beta = step_sizes(visits[picked], params)
    est[picked] = est[picked] + beta * (reward - est[picked])
    return LearnerState(est, state.week, visits)


def initial_estimates(keys, K: int, params: LearnerParams) -> np.ndarray:
    """Fresh estimates from draws ``0..K-1`` of each stream key, shape ``keys.shape + (K,)``."""
    keys = np.asarray(keys, dtype=np.uint64)
    lo, hi = params.estimate_init
    u = uniforms(keys[..., None], np.arange(K))
    return lo + (hi - lo) * u


def init_learner(K: int, params: LearnerParams, stream: AgentStream) -> LearnerState:
    """New learner at week 0; consumes ``K`` draws from ``stream``."""
    lo, hi = params.estimate_init
    return LearnerState(lo + (hi - lo) * stream.random_array(K), 0)
