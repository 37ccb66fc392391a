"""YAML experiment configuration with strict, line-anchored validation.

Every section mirrors one module config dataclass. Unknown keys, wrong
types and values rejected by a dataclass all raise :class:`ConfigError`
with ``file:line:column`` pointing at the offending node.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import yaml

from .agent import AgentConfig
from .channel import UpaConfig
from .codebook import DEFAULT_LEVELS, ActionCodebook, build_codebook
from .env import EnvConfig, EstimatorConfig, RewardConfig
from .errors import ConfigError
from .geometry import ScenarioConfig
from .measurement import NoiseConfig


@dataclass(frozen=True)
class CodebookConfig:
    k: int | None = None
    levels: tuple[float, ...] = DEFAULT_LEVELS
    prune_threshold: float = 0.98
    cap: int = 128
    mode: str = "ranked"


@dataclass(frozen=True)
class EnvSection:
    rank_penalty: float = -10.0
    reward_floor: float | None = -10.0
    multistart: str = "always"


@dataclass(frozen=True)
class EvalConfig:
    episodes: int = 100
    footprint_radius_m: float = 150.0
    sinr_threshold: float = 0.5

    def __post_init__(self):
        if self.episodes < 1:
            raise ValueError("episodes must be >= 1")


@dataclass(frozen=True)
class ExperimentConfig:
    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)
    channel: UpaConfig = field(default_factory=UpaConfig)
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    codebook: CodebookConfig = field(default_factory=CodebookConfig)
    reward: RewardConfig = field(default_factory=RewardConfig)
    estimator: EstimatorConfig = field(default_factory=EstimatorConfig)
    env: EnvSection = field(default_factory=EnvSection)
    agent: AgentConfig = field(default_factory=AgentConfig)
    eval: EvalConfig = field(default_factory=EvalConfig)
    seed: int = 0
    output_dir: str = "runs"

    def env_config(self) -> EnvConfig:
        return EnvConfig(
            scenario=self.scenario, channel=self.channel, noise=self.noise,
            reward=self.reward, estimator=self.estimator, steps=self.agent.steps,
            rank_penalty=self.env.rank_penalty, reward_floor=self.env.reward_floor,
            multistart=self.env.multistart,
        )

    def build_codebook(self) -> ActionCodebook:
        cb = self.codebook
        return build_codebook(self.scenario.m_beams, cb.k, cb.levels, cb.prune_threshold,
                              cb.cap, cb.mode)


SECTIONS = {f.name: f.default_factory for f in fields(ExperimentConfig)
            if f.default_factory is not dataclasses.MISSING}
SCALARS = {"seed": int, "output_dir": str}
# fields whose default is None; value type when set
OPTIONAL = {("codebook", "k"): int, ("env", "reward_floor"): float,
            ("agent", "eps_decay_steps"): int}
# list fields whose length is free
VARIABLE_LENGTH = {"levels", "hidden"}


def _where(source: str, node) -> str:
    m = node.start_mark
    return f"{source}:{m.line + 1}:{m.column + 1}"


def _scalar(node, source: str):
    if not isinstance(node, yaml.ScalarNode):
        raise ConfigError(f"{_where(source, node)}: expected a scalar")
    return yaml.safe_load(yaml.serialize(node))


def _coerce(value, default, key: str, node, source: str):
    """Match ``value`` to the type of the field default."""
    where = _where(source, node)
    if isinstance(default, tuple):
        if not isinstance(node, yaml.SequenceNode):
            raise ConfigError(f"{where}: '{key}' must be a list")
        items = [_scalar(n, source) for n in node.value]
        if key not in VARIABLE_LENGTH and len(items) != len(default):
            raise ConfigError(f"{where}: '{key}' needs {len(default)} entries")
        proto = default[0] if default else 0.0
        return tuple(_coerce_scalar(v, proto, key, where) for v in items)
    return _coerce_scalar(_scalar(node, source), default, key, where)


def _coerce_scalar(value, default, key, where):
    if value is None:
        return None
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"{where}: '{key}' must be true or false")
        return value
    if isinstance(value, bool):
        raise ConfigError(f"{where}: '{key}' must be a number, got a boolean")
    if isinstance(default, int):
        if isinstance(value, float) and value.is_integer():
            value = int(value)
        if not isinstance(value, int):
            raise ConfigError(f"{where}: '{key}' must be an integer")
        return value
    if isinstance(default, float):
        if isinstance(value, str):
            try:
                value = float(value)
            except ValueError:
                raise ConfigError(f"{where}: '{key}' must be a number") from None
        if not isinstance(value, (int, float)):
            raise ConfigError(f"{where}: '{key}' must be a number")
        return float(value)
    if isinstance(default, str):
        if not isinstance(value, str):
            raise ConfigError(f"{where}: '{key}' must be a string")
        return value
    raise ConfigError(f"{where}: unsupported value for '{key}'")


def _section(name: str, node, source: str, base):
    if node is None or (isinstance(node, yaml.ScalarNode) and node.value in ("", "~", "null")):
        return base
    if not isinstance(node, yaml.MappingNode):
        raise ConfigError(f"{_where(source, node)}: section '{name}' must be a mapping")
    known = {f.name: f for f in fields(base)}
    updates = {}
    for knode, vnode in node.value:
        key = knode.value
        if key not in known:
            raise ConfigError(f"{_where(source, knode)}: unknown key '{key}' in section "
                              f"'{name}'; valid keys: {', '.join(known)}")
        default = getattr(base, key)
        if default is None:
            default = OPTIONAL[(name, key)]()
        updates[key] = _coerce(vnode, default, key, vnode, source)
    try:
        return replace(base, **updates)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"{_where(source, node)}: section '{name}': {exc}") from None


def parse_config(text: str, source: str = "<config>") -> ExperimentConfig:
    """Parse YAML text into an :class:`ExperimentConfig`."""
    try:
        root = yaml.compose(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        loc = f"{source}:{mark.line + 1}:{mark.column + 1}" if mark else source
        raise ConfigError(f"{loc}: invalid YAML: {getattr(exc, 'problem', exc)}") from None
    cfg = ExperimentConfig()
    if root is None:
        return cfg
    if not isinstance(root, yaml.MappingNode):
        raise ConfigError(f"{_where(source, root)}: top level must be a mapping")
    updates = {}
    for knode, vnode in root.value:
        key = knode.value
        if key in SECTIONS:
            updates[key] = _section(key, vnode, source, getattr(cfg, key))
        elif key in SCALARS:
            updates[key] = _coerce_scalar(_scalar(vnode, source), SCALARS[key](), key,
                                          _where(source, vnode))
        else:
            valid = ", ".join([*SECTIONS, *SCALARS])
            raise ConfigError(f"{_where(source, knode)}: unknown key '{key}'; valid keys: {valid}")
    cfg = replace(cfg, **updates)
    if cfg.codebook.k is not None and not 1 <= cfg.codebook.k <= cfg.scenario.m_beams:
        raise ConfigError(f"{source}: codebook.k must lie in [1, scenario.m_beams]")
    return cfg


def load_config(path=None) -> ExperimentConfig:
    """Read a config file; ``None`` gives the defaults."""
    if path is None:
        return ExperimentConfig()
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config ({exc.strerror})") from None
    return parse_config(text, str(path))


def _plain(value):
    return [_plain(v) for v in value] if isinstance(value, tuple) else value


def config_to_dict(cfg: ExperimentConfig) -> dict:
    out = {}
    for f in fields(cfg):
        val = getattr(cfg, f.name)
        if dataclasses.is_dataclass(val):
            out[f.name] = {g.name: _plain(getattr(val, g.name)) for g in fields(val)}
        else:
            out[f.name] = val
    return out


def dump_config(cfg: ExperimentConfig) -> str:
    """Fully resolved YAML that :func:`parse_config` maps back to ``cfg``."""
    return yaml.safe_dump(config_to_dict(cfg), sort_keys=False, default_flow_style=None)
