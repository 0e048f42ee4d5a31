"""Scenario configuration and its flat ``key = value`` file format.

Example::

    mode = dqn_sum
    slots = 50000
    seed = 3
    node.0.kind = tdma
    node.0.x = 0,1        # or node.0.count = 2 for slots 0..count-1
    node.0.y = 10
    node.1.kind = q_aloha
    node.1.q = 0.1

Scalar keys are exactly the :class:`ScenarioConfig` field names.  Legacy
nodes are indexed groups ``node.<i>.<attr>`` with ``kind`` one of
``tdma`` (``x`` or ``count``, ``y``), ``q_aloha`` (``q``), ``fw_aloha``
(``w``) and ``eb_aloha`` (``w``, ``m``).  ``#`` starts a comment.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field, fields
from pathlib import Path

from dlma.agents.policy import EpsilonSchedule
from dlma.env import EBAloha, FWAloha, ProtocolSpec, QAloha, TDMA
from dlma.nn import PLAIN, RESNET

TABULAR_RL = "tabular_rl"
DQN_SUM = "dqn_sum"
DQN_FAIR = "dqn_fair"
MULTI_INDEPENDENT = "multi_independent"
MODES = (TABULAR_RL, DQN_SUM, DQN_FAIR, MULTI_INDEPENDENT)


class ConfigError(ValueError):
    """Invalid scenario field; ``field`` names the offending key."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


@dataclass(frozen=True)
class ScenarioConfig:
    legacy: tuple[ProtocolSpec, ...] = ()
    mode: str = DQN_SUM
    alpha: float = 1.0
    agents: int = 1  # K: physical DRL nodes (big agent or independent learners)
    history: int = 20  # M
    gamma: float = 0.9
    epsilon_start: float = 0.1
    epsilon_decay: float = 0.995
    epsilon_floor: float = 0.005
    learning_rate: float = 0.01
    target_every: int = 200  # F
    batch_size: int = 32  # N_E
    capacity: int = 500
    arch: str = RESNET
    hidden: int = 64
    hidden_layers: int = 6
    beta: float = 0.1  # tabular learning rate
    slots: int = 50_000  # T
    seed: int = 0
    window: int = 1000  # N for short-term throughput

    def __post_init__(self):
        object.__setattr__(self, "legacy", tuple(self.legacy))
        if self.mode not in MODES:
            raise ConfigError("mode", f"must be one of {', '.join(MODES)}, got {self.mode!r}")
        if self.arch not in (PLAIN, RESNET):
            raise ConfigError("arch", f"must be {PLAIN} or {RESNET}, got {self.arch!r}")
        if self.arch == RESNET and (self.hidden_layers < 2 or self.hidden_layers % 2):
            raise ConfigError("hidden_layers", f"resnet needs an even count >= 2, got {self.hidden_layers}")
        positive = ("agents", "history", "target_every", "batch_size", "capacity", "hidden",
                    "hidden_layers", "window")
        for name in positive:
            if getattr(self, name) < 1:
                raise ConfigError(name, f"must be >= 1, got {getattr(self, name)}")
        if self.batch_size > self.capacity:
            raise ConfigError("batch_size", f"exceeds replay capacity {self.capacity}")
        if self.slots < 0:
            raise ConfigError("slots", f"must be >= 0, got {self.slots}")
        if self.alpha < 0:
            raise ConfigError("alpha", f"must be >= 0, got {self.alpha}")
        if not 0.0 <= self.gamma < 1.0:
            raise ConfigError("gamma", f"must be in [0, 1), got {self.gamma}")
        if not 0.0 < self.beta <= 1.0:
            raise ConfigError("beta", f"must be in (0, 1], got {self.beta}")
        if self.learning_rate <= 0:
            raise ConfigError("learning_rate", f"must be > 0, got {self.learning_rate}")
        for name in ("epsilon_start", "epsilon_floor", "epsilon_decay"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ConfigError(name, f"must be in [0, 1], got {getattr(self, name)}")
        if self.epsilon_floor > self.epsilon_start:
            raise ConfigError("epsilon_floor", f"exceeds epsilon_start {self.epsilon_start}")
        if self.epsilon_decay == 0:
            raise ConfigError("epsilon_decay", "must be > 0")
        if self.mode in (TABULAR_RL, DQN_SUM) and self.agents != 1:
            raise ConfigError("agents", f"mode {self.mode} drives a single node, got {self.agents}")

    @property
    def epsilon(self) -> EpsilonSchedule:
        return EpsilonSchedule(self.epsilon_start, self.epsilon_decay, self.epsilon_floor)

    @property
    def n_nodes(self) -> int:
        return len(self.legacy) + self.agents

    def replace(self, **changes) -> "ScenarioConfig":
        return dataclasses.replace(self, **changes)


_SCALARS = {f.name: f for f in fields(ScenarioConfig) if f.name != "legacy"}
_DEFAULTS = ScenarioConfig()


def _coerce(key: str, raw: str):
    default = getattr(_DEFAULTS, key)
    try:
        if isinstance(default, bool):
            return raw.lower() in ("1", "true", "yes")
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
    except ValueError:
        raise ConfigError(key, f"cannot parse {raw!r} as {type(default).__name__}") from None
    return raw


def _int_list(key: str, raw: str) -> tuple[int, ...]:
    try:
        return tuple(int(v) for v in raw.replace(" ", "").split(",") if v)
    except ValueError:
        raise ConfigError(key, f"expected comma-separated integers, got {raw!r}") from None


def _build_node(i: int, attrs: dict[str, str]) -> ProtocolSpec:
    prefix = f"node.{i}"

    def need(name):
        if name not in attrs:
            raise ConfigError(f"{prefix}.{name}", "missing")
        return attrs[name]

    def num(name, cast):
        raw = need(name)
        try:
            return cast(raw)
        except ValueError:
            raise ConfigError(f"{prefix}.{name}", f"cannot parse {raw!r}") from None

    kind = need("kind").lower()
    try:
        if kind == "tdma":
            y = num("y", int)
            if "x" in attrs:
                return TDMA(_int_list(f"{prefix}.x", attrs["x"]), y)
            return TDMA.first(num("count", int), y)
        if kind == "q_aloha":
            return QAloha(num("q", float))
        if kind == "fw_aloha":
            return FWAloha(num("w", int))
        if kind == "eb_aloha":
            return EBAloha(num("w", int), num("m", int))
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(prefix, str(exc)) from None
    raise ConfigError(f"{prefix}.kind", f"unknown protocol {kind!r}")


def config_from_pairs(pairs: dict[str, str]) -> ScenarioConfig:
    scalars: dict = {}
    nodes: dict[int, dict[str, str]] = {}
    for key, raw in pairs.items():
        if key.startswith("node."):
            parts = key.split(".")
            if len(parts) != 3 or not parts[1].isdigit():
                raise ConfigError(key, "node keys look like node.<index>.<attr>")
            nodes.setdefault(int(parts[1]), {})[parts[2]] = raw
        elif key in _SCALARS:
            scalars[key] = _coerce(key, raw)
        else:
            raise ConfigError(key, "unknown configuration key")
    if nodes and sorted(nodes) != list(range(len(nodes))):
        raise ConfigError("node", f"node indices must be 0..{len(nodes) - 1}, got {sorted(nodes)}")
    legacy = tuple(_build_node(i, nodes[i]) for i in sorted(nodes))
    return ScenarioConfig(legacy=legacy, **scalars)


def parse_pairs(text: str) -> dict[str, str]:
    pairs: dict[str, str] = {}
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {n}", f"expected 'key = value', got {line!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        pairs[key] = value
    return pairs


def parse_config(text: str) -> ScenarioConfig:
    return config_from_pairs(parse_pairs(text))


def load_config(path: str | Path) -> ScenarioConfig:
    return parse_config(Path(path).read_text())


def with_overrides(config: ScenarioConfig, overrides: dict[str, str]) -> ScenarioConfig:
    """Apply ``key = value`` overrides (same grammar as the file) to a config."""
    pairs = config_pairs(config)
    node_keys = [k for k in overrides if k.startswith("node.")]
    for key in node_keys:
        # switching a TDMA node between x and count must not leave both set
        prefix, attr = key.rsplit(".", 1)
        if attr in ("x", "count"):
            pairs.pop(f"{prefix}.x", None)
            pairs.pop(f"{prefix}.count", None)
    pairs.update(overrides)
    return config_from_pairs(pairs)


def config_pairs(config: ScenarioConfig) -> dict[str, str]:
    pairs = {}
    for i, p in enumerate(config.legacy):
        prefix = f"node.{i}"
        if isinstance(p, TDMA):
            pairs.update({f"{prefix}.kind": "tdma", f"{prefix}.x": ",".join(map(str, p.slots)),
                          f"{prefix}.y": str(p.frame)})
        elif isinstance(p, QAloha):
            pairs.update({f"{prefix}.kind": "q_aloha", f"{prefix}.q": repr(p.q)})
        elif isinstance(p, FWAloha):
            pairs.update({f"{prefix}.kind": "fw_aloha", f"{prefix}.w": str(p.window)})
        else:
            pairs.update({f"{prefix}.kind": "eb_aloha", f"{prefix}.w": str(p.window),
                          f"{prefix}.m": str(p.max_stage)})
    for name in _SCALARS:
        pairs[name] = str(getattr(config, name))
    return pairs


def format_config(config: ScenarioConfig) -> str:
    return "".join(f"{k} = {v}\n" for k, v in config_pairs(config).items())
