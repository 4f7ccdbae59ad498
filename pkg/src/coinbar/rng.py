"""Counter-based per-agent random streams.

Each agent owns a stream identified by ``(seed, agent)``.  Draw number ``j``
of that stream is a pure function of the triple, so agents can be stepped in
any order, in parallel, or batched across runs and still see the same values.

Mixing rule (all arithmetic mod 2**64)::

    key    = splitmix64(seed ^ splitmix64(agent + AGENT_SALT))
    u(j)   = (splitmix64(key + (j + 1) * GOLDEN) >> 11) * 2**-53

``u`` is uniform on [0, 1) with 53 bits of resolution.  Draw layout used by
the simulator: draws ``0..K-1`` initialize the estimate vector, draw
``K + t`` is the night selection of week ``t``.
"""

from __future__ import annotations

import numpy as np

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
AGENT_SALT = np.uint64(0xD1B54A32D192ED03)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_MASK64 = (1 << 64) - 1


def splitmix64(x):
    """Finalizer of the SplitMix64 generator, vectorized over uint64 arrays."""
    x = np.asarray(x, dtype=np.uint64)
    with np.errstate(over="ignore"):
        x = x + GOLDEN
        x = (x ^ (x >> np.uint64(30))) * _M1
        x = (x ^ (x >> np.uint64(27))) * _M2
        return x ^ (x >> np.uint64(31))


def agent_keys(seed: int, agents) -> np.ndarray:
    """Stream keys for the given agent indices under a master seed."""
    seed = np.uint64(int(seed) & _MASK64)
    agents = np.asarray(agents, dtype=np.uint64)
    with np.errstate(over="ignore"):
        return splitmix64(seed ^ splitmix64(agents + AGENT_SALT))


def uniforms(keys, draw) -> np.ndarray:
    """Draw number ``draw`` (scalar or broadcastable array) of each stream."""
    keys = np.asarray(keys, dtype=np.uint64)
    draw = np.asarray(draw, dtype=np.uint64)
    with np.errstate(over="ignore"):
        bits = splitmix64(keys + (draw + np.uint64(1)) * GOLDEN)
    return (bits >> np.uint64(11)).astype(np.float64) * (1.0 / 9007199254740992.0)


class AgentStream:
    """Sequential view of one agent's stream."""

    def __init__(self, seed: int, agent: int, position: int = 0):
        self.seed = int(seed)
        self.agent = int(agent)
        self.key = agent_keys(seed, agent)
        self.position = int(position)

    def random(self) -> float:
        u = float(uniforms(self.key, self.position))
        self.position += 1
        return u

    def random_array(self, n: int) -> np.ndarray:
        u = uniforms(self.key, np.arange(self.position, self.position + n))
        self.position += n
        return u

    def __repr__(self):
        return f"AgentStream(seed={self.seed}, agent={self.agent}, position={self.position})"
