"""Line-oriented ``key = value`` scenario files.

Blank lines and ``#`` comments are ignored.  Keys mirror the fields of
:class:`Scenario`, :class:`SimConfig`, :class:`WorldParams` and
:class:`LearnerParams`; ``preset = NAME`` starts from a built-in preset.
Lists are comma-separated.  Unknown or repeated keys are errors.
"""

from __future__ import annotations

from dataclasses import replace
from pathlib import Path

from .errors import ConfigError, CoinbarError
from .experiments import Scenario, preset
from .utilities import PhiKind, RewardKind


def _floats(v: str) -> tuple[float, ...]:
    parts = [p.strip() for p in v.split(",") if p.strip()]
    if not parts:
        raise ValueError("empty list")
    return tuple(float(p) for p in parts)


def _ints(v: str) -> tuple[int, ...]:
    return tuple(int(p) for p in v.split(",") if p.strip())


def _pair(v: str) -> tuple[float, float]:
    lo, hi = _floats(v)
    return lo, hi


def _uint(v: str) -> int:
    n = int(v, 0)
    if not 0 <= n < 2**64:
        raise ValueError("out of the unsigned 64-bit range")
    return n


SCENARIO_KEYS = {"preset": str, "name": str, "runs": int, "sweep": _ints}
SIM_KEYS = {"reward_kind": RewardKind.parse, "phi_kind": PhiKind.parse, "weeks": int, "seed": _uint}
WORLD_KEYS = {"alpha": _floats, "capacity": float, "N": int}
LEARNER_KEYS = {
    "learning_rate": float,
    "initial_temperature": float,
    "temperature_decay": float,
    "min_temperature": float,
    "estimate_init": _pair,
    "step_rule": str,
    "temperature_scale": str,
}
ALIASES = {"reward": "reward_kind", "agents": "N"}
KEYS = {**SCENARIO_KEYS, **SIM_KEYS, **WORLD_KEYS, **LEARNER_KEYS}


def coerce(key: str, raw: str, where: str = ""):
    key = ALIASES.get(key, key)
    if key not in KEYS:
        raise ConfigError(f"{where}unknown key {key!r}")
    try:
        return key, KEYS[key](raw.strip())
    except CoinbarError as exc:
        raise ConfigError(f"{where}{key}: {exc}") from None
    except ValueError as exc:
        raise ConfigError(f"{where}bad value for {key}: {raw.strip()!r} ({exc})") from None


def parse_config(text: str, source: str = "<config>") -> dict:
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        where = f"{source}:{lineno}: "
        if "=" not in line:
            raise ConfigError(f"{where}expected 'key = value'")
        key, raw = (p.strip() for p in line.split("=", 1))
        key, value = coerce(key, raw, where)
        if key in values:
            raise ConfigError(f"{where}duplicate key {key!r}")
        values[key] = value
    return values


def load_config(path) -> dict:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror or exc}") from None
    return parse_config(text, str(path))


def _apply(s: Scenario, values: dict, rename: bool) -> Scenario:
    cfg = s.config
    world = {k: values[k] for k in WORLD_KEYS if k in values}
    learner = {k: values[k] for k in LEARNER_KEYS if k in values}
    sim = {k: values[k] for k in SIM_KEYS if k in values}
    if world:
        cfg = cfg.evolve(world=replace(cfg.world, **world))
    if learner:
        cfg = cfg.evolve(learner=replace(cfg.learner, **learner))
    if sim:
        cfg = cfg.evolve(**sim)
    changes = {k: values[k] for k in ("runs", "sweep") if k in values}
    if "name" in values:
        changes["name"] = f"{values['name']}-{cfg.reward_kind.value}" if rename else values["name"]
    return replace(s, config=cfg, **changes)


def build_scenarios(values: dict) -> list[Scenario]:
    """Scenarios described by parsed values, starting from the named preset if any.

    A ``reward_kind`` on a multi-scenario preset selects the member with
    that kind instead of overwriting all of them.
    """
    if "preset" in values:
        base = preset(values["preset"])
    else:
        base = [Scenario(values.get("name", "custom"))]
    if len(base) > 1 and "reward_kind" in values:
        base = [s for s in base if s.config.reward_kind is values["reward_kind"]]
    return [_apply(s, values, rename=len(base) > 1) for s in base]

